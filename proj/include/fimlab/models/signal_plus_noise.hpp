#pragma once

#include "fimlab/model.hpp"

namespace fimlab {

// Independent q-dimensional observations x_i ~ N(mu, Sigma + Q_i) with
// diagonal signal covariance Sigma and known noise covariances
// Q_i = sqrt(i) * UtU. Parameters are theta = [mu, diag(Sigma)].
class SignalPlusNoiseModel : public Model {
 public:
  explicit SignalPlusNoiseModel(Matrix utu);

  // The fixed 4x4 U^T U used by the reference study.
  static Matrix paper_utu();

  std::string name() const override { return "signal_plus_noise"; }
  int param_dim() const override { return 2 * q_; }
  int obs_dim() const override { return q_; }

  DataSet sample(const Vector& theta, int n, RngStream& rng) const override;
  double neg_log_lik(const Vector& theta, const DataSet& data) const override;
  double obs_neg_log_lik(const Vector& theta, const DataSet& data, int i) const override;
  Vector obs_grad(const Vector& theta, const DataSet& data, int i) const override;
  Matrix obs_hessian(const Vector& theta, const DataSet& data, int i) const override;

  bool has_analytic_fim() const override { return true; }
  SymMat expected_fim(const Vector& theta, int n) const override;

  Vector lower_bounds() const override;
  Vector default_init(const DataSet& data) const override;

  Matrix noise_cov(int i) const;  // Q_i, i is 1-based

 private:
  Matrix obs_cov(const Vector& theta, int i) const;  // Sigma + Q_i
  int q_;
  Matrix utu_;
  Matrix utu_sqrt_;  // B with B B^T = UtU, for sampling
};

}  // namespace fimlab
