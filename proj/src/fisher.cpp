#include "fimlab/fisher.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "fimlab/errors.hpp"
#include "fimlab/finite_diff.hpp"
#include "fimlab/parallel.hpp"

namespace fimlab {
namespace {

struct FitOutcome {
  bool ok = false;
  Vector theta;
};

FitOutcome try_fit(const Model& model, const DataSet& data, RngStream& rng) {
  FitOutcome out;
  try {
    MleResult res = fit_mle(model, data, rng);
    if (res.converged && res.theta.allFinite()) {
      out.ok = true;
      out.theta = std::move(res.theta);
    }
  } catch (const Error&) {
    out.ok = false;
  }
  return out;
}

}  // namespace

SymMat observed_fim(const Model& model, const DataSet& data, const Vector& theta_hat) {
  return SymMat(model.hessian(theta_hat, data).mat() / data.n());
}

SymMat mc_expected_fim(const Model& model, const Vector& theta, int n, int datasets,
                       RngStream rng, int threads, Matrix* se) {
  if (datasets < 1) throw Error("mc_expected_fim: need at least one dataset");
  const int p = model.param_dim();
  std::vector<Matrix> slots(datasets);
  parallel_for(datasets, threads, [&](int m) {
    RngStream mrng = rng.substream(static_cast<std::uint64_t>(m));
    const DataSet data = model.sample(theta, n, mrng);
    slots[m] = model.hessian(theta, data).mat();
  });
  Matrix sum = Matrix::Zero(p, p);
  for (const Matrix& h : slots) sum += h;
  const Matrix avg = sum / datasets;
  if (se) {
    Matrix ss = Matrix::Zero(p, p);
    for (const Matrix& h : slots) ss += (h - avg).cwiseAbs2();
    *se = (ss / std::max(datasets - 1, 1) / datasets).cwiseSqrt();
  }
  return SymMat(avg);
}

FimScaled expected_fim_scaled(const Model& model, const Vector& theta, int n,
                              int mc_datasets, std::optional<RngStream> rng, int threads) {
  const int p = model.param_dim();
  FimScaled out{SymMat(Matrix::Identity(p, p)), Matrix::Zero(p, p), false, 0};
  if (model.has_analytic_fim()) {
    out.value = SymMat(model.expected_fim(theta, n).mat() / n);
    out.analytic = true;
    return out;
  }
  if (mc_datasets < 1 || !rng.has_value()) {
    throw Error("expected_fim_scaled: model needs Monte Carlo datasets and a stream");
  }
  Matrix se;
  out.value = SymMat(mc_expected_fim(model, theta, n, mc_datasets, *rng, threads, &se).mat() / n);
  out.se = se / n;
  out.datasets = mc_datasets;
  return out;
}

McCovResult mc_cov_mle(const Model& model, const Vector& theta_star, int n, int reps,
                       RngStream rng, int threads) {
  if (reps < 2) throw Error("mc_cov_mle: need at least 2 replications");
  const int p = model.param_dim();
  std::vector<std::optional<Vector>> fits(reps);
  parallel_for(reps, threads, [&](int r) {
    RngStream rep = rng.substream(static_cast<std::uint64_t>(r));
    RngStream data_rng = rep.substream("data");
    RngStream search_rng = rep.substream("search");
    try {
      const DataSet data = model.sample(theta_star, n, data_rng);
      FitOutcome fit = try_fit(model, data, search_rng);
      if (fit.ok) fits[r] = std::move(fit.theta);
    } catch (const Error&) {
    }
  });
  Vector sum = Vector::Zero(p);
  int ok = 0;
  for (const auto& f : fits) {
    if (f) {
      sum += *f;
      ++ok;
    }
  }
  McCovResult out;
  out.reps = reps;
  out.failures = reps - ok;
  if (out.failures > 0.01 * reps) {
    throw TooManyFailures("mc_cov_mle: more than 1% of replications failed");
  }
  out.mean_theta = sum / ok;
  Matrix cov = Matrix::Zero(p, p);
  for (const auto& f : fits) {
    if (f) {
      const Vector d = *f - out.mean_theta;
      cov += d * d.transpose();
    }
  }
  cov *= static_cast<double>(n) / (ok - 1);
  out.n_cov = SymMat(std::move(cov));
  return out;
}

SymMat typical_outcome(const std::vector<SymMat>& candidates, const SymMat& target) {
  if (candidates.empty()) throw EmptyCandidates("typical_outcome: no candidates");
  if (candidates.size() % 2 == 0) {
    throw Error("typical_outcome: need an odd number of candidates");
  }
  std::vector<std::size_t> order(candidates.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<double> dist(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].dim() != target.dim()) {
      throw Error("typical_outcome: dimension mismatch");
    }
    dist[i] = frobenius_distance(candidates[i].mat(), target.mat());
  }
  // Tie-break on the matrix entries themselves so the pick does not depend on
  // the input order.
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (dist[a] != dist[b]) return dist[a] < dist[b];
    const Matrix &ma = candidates[a].mat(), &mb = candidates[b].mat();
    for (int r = 0; r < ma.rows(); ++r) {
      for (int c = 0; c < ma.cols(); ++c) {
        if (ma(r, c) != mb(r, c)) return ma(r, c) < mb(r, c);
      }
    }
    return false;
  });
  return candidates[order[order.size() / 2]];
}

namespace {

struct EstimatorDraw {
  bool ok = false;
  Matrix h_inv;
  Matrix f_inv;
};

// One replication of the estimator pair at a fresh MLE.
EstimatorDraw estimator_draw(const Model& model, const Vector& theta_star, int n,
                             int fim_datasets, RngStream rep) {
  EstimatorDraw out;
  RngStream data_rng = rep.substream("data");
  RngStream search_rng = rep.substream("search");
  RngStream fim_rng = rep.substream("fim");
  try {
    const DataSet data = model.sample(theta_star, n, data_rng);
    FitOutcome fit = try_fit(model, data, search_rng);
    if (!fit.ok) return out;
    const SymMat hbar = observed_fim(model, data, fit.theta);
    const FimScaled fbar = expected_fim_scaled(model, fit.theta, n, fim_datasets, fim_rng, 1);
    out.h_inv = sym_inverse(hbar).mat();
    out.f_inv = sym_inverse(fbar.value).mat();
    out.ok = true;
  } catch (const Error&) {
    out.ok = false;
  }
  return out;
}

}  // namespace

DiscrepancyReport discrepancy_study(const Model& model, const Vector& theta_star, int n,
                                    const DiscrepancyOptions& opts, RngStream rng) {
  const int p = model.param_dim();
  McCovResult target = mc_cov_mle(model, theta_star, n, opts.reps_target,
                                  rng.substream("target"), opts.threads);

  std::vector<EstimatorDraw> draws(opts.reps_outer);
  RngStream outer = rng.substream("outer");
  parallel_for(opts.reps_outer, opts.threads, [&](int r) {
    draws[r] = estimator_draw(model, theta_star, n, opts.fim_datasets,
                              outer.substream(static_cast<std::uint64_t>(r)));
  });

  DiscrepancyReport rep;
  rep.target = target.n_cov;
  rep.failures_target = target.failures;
  Matrix mse_h = Matrix::Zero(p, p), mse_f = Matrix::Zero(p, p);
  std::vector<SymMat> cand_h, cand_f;
  int ok = 0;
  for (const auto& d : draws) {
    if (!d.ok) continue;
    ++ok;
    mse_h += (d.h_inv - target.n_cov.mat()).cwiseAbs2();
    mse_f += (d.f_inv - target.n_cov.mat()).cwiseAbs2();
  }
  if (ok < 3) throw TooManyFailures("discrepancy_study: almost all replications failed");
  rep.failures_outer = opts.reps_outer - ok;
  rep.reps_outer_used = ok;
  rep.mse_h = mse_h / ok;
  rep.mse_f = mse_f / ok;

  rep.rel_h = Matrix(p, p);
  rep.rel_f = Matrix(p, p);
  for (int r = 0; r < p; ++r) {
    for (int c = 0; c < p; ++c) {
      const double t = target.n_cov(r, c);
      if (t == 0.0) {
        rep.rel_h(r, c) = std::numeric_limits<double>::quiet_NaN();
        rep.rel_f(r, c) = std::numeric_limits<double>::quiet_NaN();
      } else {
        rep.rel_h(r, c) = std::abs(std::sqrt(rep.mse_h(r, c)) / t);
        rep.rel_f(r, c) = std::abs(std::sqrt(rep.mse_f(r, c)) / t);
      }
    }
  }

  int want = std::min<int>(opts.typical_draws, ok);
  if (want % 2 == 0) --want;
  cand_h.reserve(want);
  cand_f.reserve(want);
  for (const auto& d : draws) {
    if (static_cast<int>(cand_h.size()) >= want) break;
    if (!d.ok) continue;
    cand_h.emplace_back(d.h_inv);
    cand_f.emplace_back(d.f_inv);
  }
  rep.typical_count = want;
  rep.typical_h = typical_outcome(cand_h, target.n_cov);
  rep.typical_f = typical_outcome(cand_f, target.n_cov);
  return rep;
}

CumulantSet null_cumulants(const Model& model, const Vector& theta_star, int n, int reps,
                           RngStream rng, int threads) {
  if (!model.independent_observations()) {
    throw NotIndependentData("null_cumulants: needs independent observations");
  }
  if (reps < 2) throw Error("null_cumulants: need at least 2 replications");
  const int p = model.param_dim();

  struct Partial {
    Vector sum_r;
    Matrix sum_rs, sum_r_outer;
    Tensor3 sum_rst, sum_rs_t;
    Partial(int p)
        : sum_r(Vector::Zero(p)), sum_rs(Matrix::Zero(p, p)),
          sum_r_outer(Matrix::Zero(p, p)), sum_rst(p), sum_rs_t(p) {}
  };
  std::vector<Partial> parts(reps, Partial(p));

  // Step for the third-derivative differences of the analytic hessian.
  Vector h3(p);
  for (int t = 0; t < p; ++t) h3(t) = 1e-4 * std::max(1.0, std::abs(theta_star(t)));

  parallel_for(reps, threads, [&](int m) {
    RngStream mrng = rng.substream(static_cast<std::uint64_t>(m));
    const DataSet data = model.sample(theta_star, n, mrng);
    Partial& part = parts[m];
    for (int i = 0; i < n; ++i) {
      const Vector u1 = model.obs_grad(theta_star, data, i);
      const Matrix u2 = model.obs_hessian(theta_star, data, i);
      part.sum_r += u1;
      part.sum_rs += u2;
      part.sum_r_outer += u1 * u1.transpose();
      for (int t = 0; t < p; ++t) {
        Vector up = theta_star, dn = theta_star;
        up(t) += h3(t);
        dn(t) -= h3(t);
        const Matrix d3 = (model.obs_hessian(up, data, i) - model.obs_hessian(dn, data, i)) /
                          (2.0 * h3(t));
        for (int r = 0; r < p; ++r) {
          for (int s = 0; s < p; ++s) {
            part.sum_rst(r, s, t) += d3(r, s);
          }
        }
      }
      for (int r = 0; r < p; ++r) {
        for (int s = 0; s < p; ++s) {
          for (int t = 0; t < p; ++t) {
            part.sum_rs_t(r, s, t) += u2(r, s) * u1(t);
          }
        }
      }
    }
  });

  CumulantSet cum(p);
  cum.n = n;
  cum.reps = reps;
  const double count = static_cast<double>(reps) * n;
  Vector mean_r = Vector::Zero(p);
  Matrix mean_rs = Matrix::Zero(p, p), mean_outer = Matrix::Zero(p, p);
  Tensor3 mean_rst(p), mean_rs_t(p);
  for (const Partial& part : parts) {
    mean_r += part.sum_r;
    mean_rs += part.sum_rs;
    mean_outer += part.sum_r_outer;
    for (int r = 0; r < p; ++r) {
      for (int s = 0; s < p; ++s) {
        for (int t = 0; t < p; ++t) {
          mean_rst(r, s, t) += part.sum_rst(r, s, t);
          mean_rs_t(r, s, t) += part.sum_rs_t(r, s, t);
        }
      }
    }
  }
  mean_r /= count;
  mean_rs /= count;
  mean_outer /= count;
  cum.r = mean_r;
  cum.rs = mean_rs;
  cum.r_s = mean_outer - mean_r * mean_r.transpose();
  for (int r = 0; r < p; ++r) {
    for (int s = 0; s < p; ++s) {
      for (int t = 0; t < p; ++t) {
        cum.rst(r, s, t) = mean_rst(r, s, t) / count;
        cum.rs_t(r, s, t) = mean_rs_t(r, s, t) / count - mean_rs(r, s) * mean_r(t);
      }
    }
  }
  cum.inv_r_s = sym_inverse(SymMat(0.5 * (cum.r_s + cum.r_s.transpose()))).mat();
  return cum;
}

ScoreSample score_draw(const Model& model, const DataSet& data, const Vector& theta_star,
                       const CumulantSet& cum) {
  const int p = model.param_dim();
  const int n = data.n();
  const double root_n = std::sqrt(static_cast<double>(n));
  ScoreSample out;
  out.z_r = (model.grad(theta_star, data) - n * cum.r) / root_n;
  out.z_st = (model.hessian(theta_star, data).mat() - n * cum.rs) / root_n;
  const Vector b = cum.inv_r_s * out.z_r;  // kappa^{v,u} Z_u
  out.y_st = out.z_st;
  for (int s = 0; s < p; ++s) {
    for (int t = 0; t < p; ++t) {
      double corr = 0.0;
      for (int v = 0; v < p; ++v) corr += cum.rs_t(s, t, v) * b(v);
      out.y_st(s, t) -= corr;
    }
  }
  return out;
}

GapCheck theorem1_gap_check(const Model& model, const Vector& theta_star, int n,
                            const CumulantSet& cum, const GapCheckOptions& opts,
                            RngStream rng) {
  const int p = model.param_dim();
  GapCheck out;

  McCovResult target = mc_cov_mle(model, theta_star, n, opts.reps_target,
                                  rng.substream("target"), opts.threads);

  // Left side: paired per-replication squared-error differences.
  std::vector<EstimatorDraw> draws(opts.reps_lhs);
  RngStream lhs_rng = rng.substream("lhs");
  parallel_for(opts.reps_lhs, opts.threads, [&](int r) {
    draws[r] = estimator_draw(model, theta_star, n, opts.fim_datasets,
                              lhs_rng.substream(static_cast<std::uint64_t>(r)));
  });
  Matrix sum_g = Matrix::Zero(p, p), sum_g2 = Matrix::Zero(p, p);
  int ok = 0;
  for (const auto& d : draws) {
    if (!d.ok) continue;
    ++ok;
    const Matrix g = (d.h_inv - target.n_cov.mat()).cwiseAbs2() -
                     (d.f_inv - target.n_cov.mat()).cwiseAbs2();
    sum_g += g;
    sum_g2 += g.cwiseAbs2();
  }
  if (ok < 3) throw TooManyFailures("theorem1_gap_check: almost all replications failed");
  out.failures = opts.reps_lhs - ok;
  const Matrix mean_g = sum_g / ok;
  out.lhs = n * mean_g;
  out.lhs_se = n * ((sum_g2 / ok - mean_g.cwiseAbs2()) / (ok - 1)).cwiseMax(0.0).cwiseSqrt();

  // Right side: quadratic form in the orthogonalized second-derivative scores.
  RngStream rhs_rng = rng.substream("rhs");
  std::vector<Matrix> a2(opts.reps_rhs);
  parallel_for(opts.reps_rhs, opts.threads, [&](int r) {
    RngStream rep = rhs_rng.substream(static_cast<std::uint64_t>(r));
    const DataSet data = model.sample(theta_star, n, rep);
    const ScoreSample s = score_draw(model, data, theta_star, cum);
    const Matrix a = (cum.inv_r_s * s.y_st * cum.inv_r_s) / std::sqrt(static_cast<double>(n));
    a2[r] = a.cwiseAbs2();
  });
  Matrix sum_a = Matrix::Zero(p, p), sum_a2 = Matrix::Zero(p, p);
  for (const Matrix& m : a2) {
    sum_a += m;
    sum_a2 += m.cwiseAbs2();
  }
  const Matrix mean_a = sum_a / opts.reps_rhs;
  out.rhs = n * mean_a;
  out.rhs_se = n * ((sum_a2 / opts.reps_rhs - mean_a.cwiseAbs2()) / (opts.reps_rhs - 1))
                   .cwiseMax(0.0).cwiseSqrt();
  return out;
}

double condition_a9_variance(const Model& model, const Vector& theta_star, int n,
                             int reps, int r, int s, const CumulantSet& cum,
                             RngStream rng, int threads) {
  if (!model.independent_observations()) {
    throw NotIndependentData("condition_a9_variance: needs independent observations");
  }
  const int p = model.param_dim();
  if (r < 0 || r >= p || s < 0 || s >= p) throw Error("condition_a9_variance: bad entry");
  // Welford accumulators per replication, combined in index order; the naive
  // sum-of-squares form loses everything to cancellation when the variance is
  // orders of magnitude below the mean (the curvature-constant case).
  struct Acc {
    double count = 0.0, mean = 0.0, m2 = 0.0;
  };
  std::vector<Acc> parts(reps);
  parallel_for(reps, threads, [&](int m) {
    RngStream mrng = rng.substream(static_cast<std::uint64_t>(m));
    const DataSet data = model.sample(theta_star, n, mrng);
    Acc acc;
    for (int i = 0; i < n; ++i) {
      const Vector u1 = model.obs_grad(theta_star, data, i);
      const Matrix u2 = model.obs_hessian(theta_star, data, i);
      const Vector b = cum.inv_r_s * u1;
      Matrix resid = u2 - cum.rs;
      for (int t = 0; t < p; ++t) {
        for (int u = 0; u < p; ++u) {
          double corr = 0.0;
          for (int v = 0; v < p; ++v) corr += cum.rs_t(t, u, v) * b(v);
          resid(t, u) -= corr;
        }
      }
      const double w = (cum.inv_r_s * resid * cum.inv_r_s)(r, s);
      acc.count += 1.0;
      const double d = w - acc.mean;
      acc.mean += d / acc.count;
      acc.m2 += d * (w - acc.mean);
    }
    parts[m] = acc;
  });
  Acc total;
  for (const Acc& a : parts) {
    if (a.count == 0.0) continue;
    const double d = a.mean - total.mean;
    const double count = total.count + a.count;
    total.m2 += a.m2 + d * d * total.count * a.count / count;
    total.mean += d * a.count / count;
    total.count = count;
  }
  return total.count > 0.0 ? total.m2 / total.count : 0.0;
}

}  // namespace fimlab
