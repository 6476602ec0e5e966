#pragma once

#include "fimlab/model.hpp"

namespace fimlab {

// Multivariate normal with known covariance; theta is the mean. The
// log-likelihood is exactly quadratic, which makes this the reference case
// for perturbation-based curvature estimates.
class GaussianMeanModel : public Model {
 public:
  explicit GaussianMeanModel(SymMat cov);

  std::string name() const override { return "gaussian_mean_vec"; }
  int param_dim() const override { return q_; }
  int obs_dim() const override { return q_; }

  DataSet sample(const Vector& theta, int n, RngStream& rng) const override;
  double neg_log_lik(const Vector& theta, const DataSet& data) const override;
  double obs_neg_log_lik(const Vector& theta, const DataSet& data, int i) const override;
  Vector obs_grad(const Vector& theta, const DataSet& data, int i) const override;
  Matrix obs_hessian(const Vector& theta, const DataSet& data, int i) const override;

  bool has_analytic_fim() const override { return true; }
  SymMat expected_fim(const Vector& theta, int n) const override;

  Vector default_init(const DataSet& data) const override;

 private:
  int q_;
  Matrix cov_;
  Matrix prec_;
  Matrix chol_;
  double log_det_;
};

}  // namespace fimlab
