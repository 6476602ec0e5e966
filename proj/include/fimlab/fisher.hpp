#pragma once

#include <optional>
#include <vector>

#include "fimlab/model.hpp"
#include "fimlab/solve.hpp"

namespace fimlab {

// Observed information averaged per observation: hessian(theta_hat) / n.
SymMat observed_fim(const Model& model, const DataSet& data, const Vector& theta_hat);

struct FimScaled {
  SymMat value;      // expected information / n at theta
  Matrix se;         // entrywise Monte Carlo standard errors (zero if analytic)
  bool analytic = false;
  int datasets = 0;
};

// Expected information averaged per observation. Uses the model's closed form
// when it has one, otherwise averages hessians over fresh datasets simulated
// at theta.
FimScaled expected_fim_scaled(const Model& model, const Vector& theta, int n,
                              int mc_datasets = 0, std::optional<RngStream> rng = {},
                              int threads = 1);

struct McCovResult {
  SymMat n_cov;     // n * sample covariance of the MLE
  Vector mean_theta;
  int reps = 0;
  int failures = 0;
};

// Simulate-and-refit covariance of the MLE at theta_star. Failed replications
// (solver failure or degenerate likelihood) are excluded and counted; more
// than 1% failures is an error.
McCovResult mc_cov_mle(const Model& model, const Vector& theta_star, int n, int reps,
                       RngStream rng, int threads = 1);

struct DiscrepancyOptions {
  int reps_target = 20000;
  int reps_outer = 10000;
  int fim_datasets = 100;   // per-replication Monte Carlo expected-information draws
  int typical_draws = 1001; // capped at the largest odd count available
  int threads = 1;
};

struct DiscrepancyReport {
  SymMat target;            // n * cov(theta_hat)
  Matrix mse_h, mse_f;      // entrywise MSE of inverse observed / inverse expected
  Matrix rel_h, rel_f;      // |sqrt(MSE)/target|, NaN where target entry is 0
  SymMat typical_h, typical_f;
  int reps_outer_used = 0;
  int typical_count = 0;
  int failures_target = 0;
  int failures_outer = 0;
};

// Head-to-head accuracy study of inverse observed vs inverse expected
// information as estimates of the MLE covariance.
DiscrepancyReport discrepancy_study(const Model& model, const Vector& theta_star, int n,
                                    const DiscrepancyOptions& opts, RngStream rng);

// Candidate whose Frobenius distance to the target is the median. Requires an
// odd number of candidates.
SymMat typical_outcome(const std::vector<SymMat>& candidates, const SymMat& target);

// Dense rank-3 array of per-observation third derivative averages.
class Tensor3 {
 public:
  explicit Tensor3(int p) : p_(p), v_(static_cast<std::size_t>(p) * p * p, 0.0) {}
  double& operator()(int a, int b, int c) { return v_[(static_cast<std::size_t>(a) * p_ + b) * p_ + c]; }
  double operator()(int a, int b, int c) const { return v_[(static_cast<std::size_t>(a) * p_ + b) * p_ + c]; }
  int dim() const { return p_; }

 private:
  int p_;
  std::vector<double> v_;
};

// Null-evaluated average cumulants of the log-likelihood derivatives:
// kappa_rs = E(U_rs)/..., kappa_r_s = cov(U_r, U_s), kappa_rst = E(U_rst),
// kappa_rs_t = cov(U_rs, U_t), all averaged per observation, plus the inverse
// of [kappa_r_s]. Third derivatives come from central differences of the
// analytic per-observation hessian.
struct CumulantSet {
  Vector r;        // E U_r (zero in theory; kept empirical so the
                   // orthogonalization below is exact in-sample)
  Matrix rs;       // E U_rs
  Matrix r_s;      // cov(U_r, U_s)
  Tensor3 rst;     // E U_rst
  Tensor3 rs_t;    // cov(U_rs, U_t)
  Matrix inv_r_s;  // [kappa_r_s]^{-1}
  int n = 0;
  int reps = 0;
  CumulantSet(int p) : r(p), rs(p, p), r_s(p, p), rst(p), rs_t(p), inv_r_s(p, p) {}
};

CumulantSet null_cumulants(const Model& model, const Vector& theta_star, int n, int reps,
                           RngStream rng, int threads = 1);

// Standardized first and second derivative deviations for one dataset drawn
// at theta_star, and the part of the second-derivative deviation orthogonal
// to the scores.
struct ScoreSample {
  Vector z_r;
  Matrix z_st;
  Matrix y_st;
};

ScoreSample score_draw(const Model& model, const DataSet& data, const Vector& theta_star,
                       const CumulantSet& cum);

struct GapCheckOptions {
  int reps_lhs = 4000;
  int reps_target = 8000;
  int reps_rhs = 4000;
  int fim_datasets = 100;
  int threads = 1;
};

struct GapCheck {
  Matrix lhs, lhs_se;  // n * (MSE_H - MSE_F), paired, with standard errors
  Matrix rhs, rhs_se;  // n * E(A_nrs^2)
  int failures = 0;
};

// Monte Carlo check that the leading-order MSE gap between the two covariance
// estimators matches its quadratic-form prediction.
GapCheck theorem1_gap_check(const Model& model, const Vector& theta_star, int n,
                            const CumulantSet& cum, const GapCheckOptions& opts,
                            RngStream rng);

// Per-observation variance of the standardized residual second-derivative
// combination for entry (r, s); the regularity condition requires this to
// stay bounded, and it vanishes for curvature-constant families.
double condition_a9_variance(const Model& model, const Vector& theta_star, int n,
                             int reps, int r, int s, const CumulantSet& cum,
                             RngStream rng, int threads = 1);

// Monte Carlo expected information: average of analytic hessians over fresh
// datasets simulated at theta (not divided by n).
SymMat mc_expected_fim(const Model& model, const Vector& theta, int n, int datasets,
                       RngStream rng, int threads = 1, Matrix* se = nullptr);

}  // namespace fimlab
