#include "fimlab/solve.hpp"

#include <cmath>

#include "fimlab/errors.hpp"
#include "fimlab/models/state_space.hpp"

namespace fimlab {
namespace {

Vector project(Vector x, const Vector& lo, const Vector& hi) {
  for (int j = 0; j < x.size(); ++j) x(j) = std::min(std::max(x(j), lo(j)), hi(j));
  return x;
}

double guarded_nll(const Model& model, const Vector& theta, const DataSet& data) {
  const double v = model.neg_log_lik(theta, data);
  if (!std::isfinite(v)) throw NonFiniteEvaluation("neg_log_lik returned non-finite value");
  return v;
}

}  // namespace

MleResult newton_mle(const Model& model, const DataSet& data, const NewtonOptions& opts) {
  const Vector lo = model.lower_bounds();
  const Vector hi = model.upper_bounds();
  Vector theta = opts.init.size() ? opts.init : model.default_init(data);
  theta = project(std::move(theta), lo, hi);

  MleResult out;
  double f = guarded_nll(model, theta, data);
  for (int it = 0; it < opts.max_iters; ++it) {
    out.iterations = it + 1;
    const Vector g = model.grad(theta, data);
    out.grad_norm = g.cwiseAbs().maxCoeff();
    if (out.grad_norm <= opts.grad_tol) {
      out.converged = true;
      break;
    }
    Vector dir;
    Eigen::LDLT<Matrix> ldlt(model.hessian(theta, data).mat());
    if (ldlt.info() == Eigen::Success) {
      dir = ldlt.solve(-g);
    }
    if (!dir.size() || !dir.allFinite() || dir.dot(g) >= 0.0) {
      // Indefinite or singular curvature: damped gradient step.
      dir = -g / std::max(1.0, g.norm());
    }
    bool stepped = false;
    double scale = 1.0;
    for (int bt = 0; bt < 40; ++bt) {
      const Vector trial = project(theta + scale * dir, lo, hi);
      double ft;
      try {
        ft = guarded_nll(model, trial, data);
      } catch (const Error&) {
        scale *= opts.damping;
        continue;
      }
      if (ft < f) {
        theta = trial;
        f = ft;
        stepped = true;
        break;
      }
      scale *= opts.damping;
    }
    if (!stepped) {
      // No descent anywhere along the direction: report the current point.
      const Vector gf = model.grad(theta, data);
      out.grad_norm = gf.cwiseAbs().maxCoeff();
      out.converged = out.grad_norm <= opts.stall_tol;
      break;
    }
  }
  out.theta = model.canonicalize(theta);
  out.nll = f;
  return out;
}

MleResult stochastic_search_mle(const Model& model, const DataSet& data,
                                const SearchOptions& opts, RngStream& rng) {
  Vector lo = opts.box_lo, hi = opts.box_hi;
  if (!lo.size() || !hi.size()) {
    const auto* ss = dynamic_cast<const StateSpaceModel*>(&model);
    if (ss) {
      lo = ss->search_box_lo();
      hi = ss->search_box_hi();
    } else {
      throw Error("stochastic_search_mle: no search box given and no model default");
    }
  }
  if (lo.size() != hi.size() || (lo.array() >= hi.array()).any()) {
    throw Error("stochastic_search_mle: invalid search box");
  }
  const Vector width = hi - lo;
  Vector theta = opts.init.size() ? project(opts.init, lo, hi) : Vector(0.5 * (lo + hi));
  double f = guarded_nll(model, theta, data);

  const int budget = std::max(opts.budget, 1);
  const double rho = std::pow(opts.final_scale / opts.init_scale,
                              1.0 / std::max(budget - 1, 1));
  double scale = opts.init_scale;
  MleResult out;
  for (int k = 0; k < budget; ++k, scale *= rho) {
    Vector trial(theta.size());
    for (int j = 0; j < theta.size(); ++j) {
      trial(j) = theta(j) + scale * width(j) * rng.normal();
    }
    trial = project(std::move(trial), lo, hi);
    double ft;
    try {
      ft = guarded_nll(model, trial, data);
    } catch (const Error&) {
      continue;
    }
    if (ft < f) {
      theta = std::move(trial);
      f = ft;
    }
  }
  out.iterations = budget;
  out.theta = model.canonicalize(theta);
  out.nll = f;
  out.grad_norm = std::numeric_limits<double>::quiet_NaN();
  out.converged = true;  // best-found point by construction
  return out;
}

MleResult fit_mle(const Model& model, const DataSet& data, RngStream& rng) {
  if (model.default_solver() == SolverKind::newton) {
    return newton_mle(model, data);
  }
  SearchOptions opts;
  return stochastic_search_mle(model, data, opts, rng);
}

}  // namespace fimlab
