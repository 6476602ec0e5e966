#include "fimlab/mcfim.hpp"

#include <cmath>
#include <vector>

#include "fimlab/errors.hpp"
#include "fimlab/parallel.hpp"

namespace fimlab {
namespace {

void check_delta(const Vector& delta) {
  if ((delta.array() == 0.0).any()) {
    throw ZeroPerturbationComponent("sp hessian estimate: zero perturbation component");
  }
}

Matrix rank_one_sym(const Vector& dg_over_2c, const Vector& delta) {
  const Matrix t = dg_over_2c * delta.cwiseInverse().transpose();
  return 0.5 * (t + t.transpose());
}

}  // namespace

Matrix sp_hessian_estimate(const GradOracle& grad_fn, const Vector& theta, double c,
                           const Vector& delta) {
  if (!(c > 0.0)) throw Error("sp_hessian_estimate: step must be positive");
  check_delta(delta);
  const Vector gp = grad_fn(theta + c * delta);
  const Vector gm = grad_fn(theta - c * delta);
  if (!gp.allFinite() || !gm.allFinite()) {
    throw NonFiniteEvaluation("sp_hessian_estimate: non-finite gradient");
  }
  return rank_one_sym((gp - gm) / (2.0 * c), delta);
}

Matrix sp_hessian_estimate_ll(const NoisyLoss& loss, const Vector& theta, double c,
                              const Vector& delta, const Vector& delta_tilde) {
  if (!(c > 0.0)) throw Error("sp_hessian_estimate_ll: step must be positive");
  check_delta(delta);
  check_delta(delta_tilde);
  // One-sided SP gradients at theta +- c delta, sharing delta_tilde.
  const Vector up = theta + c * delta;
  const Vector dn = theta - c * delta;
  const double y_up = loss(up);
  const double y_up_t = loss(up + c * delta_tilde);
  const double y_dn = loss(dn);
  const double y_dn_t = loss(dn + c * delta_tilde);
  if (!std::isfinite(y_up) || !std::isfinite(y_up_t) ||
      !std::isfinite(y_dn) || !std::isfinite(y_dn_t)) {
    throw NonFiniteEvaluation("sp_hessian_estimate_ll: non-finite measurement");
  }
  const Vector g_up = (y_up_t - y_up) / c * delta_tilde.cwiseInverse();
  const Vector g_dn = (y_dn_t - y_dn) / c * delta_tilde.cwiseInverse();
  return rank_one_sym((g_up - g_dn) / (2.0 * c), delta);
}

Matrix psi(const Matrix& h, const Vector& delta) {
  check_delta(delta);
  const int p = static_cast<int>(delta.size());
  const Matrix d = delta * delta.cwiseInverse().transpose() - Matrix::Identity(p, p);
  return 0.5 * (h * d + d.transpose() * h);
}

namespace {

// Shared implementation: walks one draw sequence and accumulates the plain
// average and the feedback recursion together.
std::pair<FimEstimate, FimEstimate> run_fim(const Model& model, const Vector& theta,
                                            int n, const McFimOptions& opts,
                                            bool per_observation, RngStream& rng) {
  const int p = model.param_dim();
  if (per_observation && !model.independent_observations()) {
    throw NotIndependentData("fim_indep: model observations are dependent");
  }
  if (opts.datasets < 1 || opts.inner_reps < 1) {
    throw Error("fim estimate: need at least one dataset and one inner estimate");
  }
  Matrix basic_sum = Matrix::Zero(p, p);
  Matrix fb = Matrix::Zero(p, p);                    // running feedback estimate
  std::vector<Matrix> fb_obs;                        // per-observation running estimates
  if (per_observation) fb_obs.assign(n, Matrix::Zero(p, p));

  for (int i = 1; i <= opts.datasets; ++i) {
    RngStream rng_i = rng.substream(static_cast<std::uint64_t>(i));
    RngStream data_rng = rng_i.substream("data");
    RngStream pert_rng = rng_i.substream("pert");
    const DataSet data = model.sample(theta, n, data_rng);
    if (!per_observation) {
      Matrix inc = Matrix::Zero(p, p);
      for (int k = 0; k < opts.inner_reps; ++k) {
        const Vector delta = sample_perturbation(opts.dist, p, pert_rng);
        Matrix hhat;
        if (opts.mode == McFimMode::gradient) {
          hhat = sp_hessian_estimate(
              [&](const Vector& t) { return model.grad(t, data); }, theta, opts.c, delta);
        } else {
          const Vector delta_t = sample_perturbation(opts.dist, p, pert_rng);
          hhat = sp_hessian_estimate_ll(
              [&](const Vector& t) { return model.neg_log_lik(t, data); }, theta, opts.c,
              delta, delta_t);
        }
        basic_sum += hhat;
        inc += hhat - psi(fb, delta);
      }
      fb = ((i - 1.0) * fb + inc / opts.inner_reps) / i;
    } else {
      std::vector<Matrix> inc_obs(n, Matrix::Zero(p, p));
      for (int k = 0; k < opts.inner_reps; ++k) {
        for (int j = 0; j < n; ++j) {
          const Vector delta = sample_perturbation(opts.dist, p, pert_rng);
          Matrix hhat;
          if (opts.mode == McFimMode::gradient) {
            hhat = sp_hessian_estimate(
                [&](const Vector& t) { return model.obs_grad(t, data, j); }, theta,
                opts.c, delta);
          } else {
            const Vector delta_t = sample_perturbation(opts.dist, p, pert_rng);
            hhat = sp_hessian_estimate_ll(
                [&](const Vector& t) { return model.obs_neg_log_lik(t, data, j); },
                theta, opts.c, delta, delta_t);
          }
          basic_sum += hhat;
          inc_obs[j] += hhat - psi(fb_obs[j], delta);
        }
      }
      for (int j = 0; j < n; ++j) {
        fb_obs[j] = ((i - 1.0) * fb_obs[j] + inc_obs[j] / opts.inner_reps) / i;
      }
    }
  }
  const double total = static_cast<double>(opts.datasets) * opts.inner_reps;
  Matrix basic = basic_sum / total;
  Matrix enhanced;
  if (per_observation) {
    enhanced = Matrix::Zero(p, p);
    for (int j = 0; j < n; ++j) enhanced += fb_obs[j];
  } else {
    enhanced = fb;
  }
  FimEstimate b{SymMat(0.5 * (basic + basic.transpose())), opts.datasets, opts.inner_reps,
                false, per_observation};
  FimEstimate f{SymMat(0.5 * (enhanced + enhanced.transpose())), opts.datasets,
                opts.inner_reps, true, per_observation};
  return {std::move(b), std::move(f)};
}

}  // namespace

FimEstimate fim_basic(const Model& model, const Vector& theta, int n,
                      const McFimOptions& opts, RngStream rng) {
  return run_fim(model, theta, n, opts, opts.per_observation, rng).first;
}

FimEstimate fim_feedback(const Model& model, const Vector& theta, int n,
                         const McFimOptions& opts, RngStream rng) {
  return run_fim(model, theta, n, opts, opts.per_observation, rng).second;
}

FimEstimate fim_indep(const Model& model, const Vector& theta, int n,
                      const McFimOptions& opts, bool feedback, RngStream rng) {
  auto pair = run_fim(model, theta, n, opts, true, rng);
  return feedback ? pair.second : pair.first;
}

std::pair<FimEstimate, FimEstimate> fim_pair(const Model& model, const Vector& theta,
                                             int n, const McFimOptions& opts, RngStream rng) {
  return run_fim(model, theta, n, opts, false, rng);
}

std::pair<FimEstimate, FimEstimate> fim_indep_pair(const Model& model, const Vector& theta,
                                                   int n, const McFimOptions& opts,
                                                   RngStream rng) {
  return run_fim(model, theta, n, opts, true, rng);
}

double relative_error(const Matrix& estimate, const Matrix& reference) {
  const double denom = spectral_norm(reference);
  if (denom == 0.0) throw ZeroReference("relative_error: reference has zero norm");
  return spectral_norm(estimate - reference) / denom;
}

McFimBenchRow mcfim_benchmark_row(const Model& model, const Vector& theta, int n,
                                  const McFimOptions& opts, const SymMat& reference,
                                  int runs, bool per_observation, RngStream rng,
                                  int threads, const std::string& label) {
  if (runs < 2) throw Error("mcfim_benchmark_row: need at least 2 runs");
  std::vector<double> rel_basic(runs), rel_enh(runs);
  parallel_for(runs, threads, [&](int r) {
    RngStream run_rng = rng.substream(static_cast<std::uint64_t>(r));
    auto pair = per_observation
                    ? fim_indep_pair(model, theta, n, opts, run_rng)
                    : fim_pair(model, theta, n, opts, run_rng);
    rel_basic[r] = relative_error(pair.first.value.mat(), reference.mat());
    rel_enh[r] = relative_error(pair.second.value.mat(), reference.mat());
  });
  McFimBenchRow row;
  row.label = label;
  row.runs = runs;
  row.datasets = opts.datasets;
  row.mean_rel_basic = mean(rel_basic);
  row.se_rel_basic = standard_error(rel_basic);
  row.mean_rel_enhanced = mean(rel_enh);
  row.se_rel_enhanced = standard_error(rel_enh);
  std::vector<double> diffs(runs);
  for (int r = 0; r < runs; ++r) diffs[r] = rel_basic[r] - rel_enh[r];
  row.ttest = paired_t_test(diffs);
  return row;
}

}  // namespace fimlab
