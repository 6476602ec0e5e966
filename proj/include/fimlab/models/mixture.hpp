#pragma once

#include "fimlab/model.hpp"

namespace fimlab {

// Two-component normal mixture density
//   f(x) = lambda N(mu1, s1^2) + (1 - lambda) N(mu2, s2^2).
// Two parameterizations: location() fixes the scales and estimates
// [lambda, mu1, mu2]; location_scale() estimates [lambda, mu1, s1, mu2, s2].
class MixtureModel : public Model {
 public:
  static MixtureModel location(double sigma1, double sigma2);
  static MixtureModel location_scale();

  std::string name() const override;
  int param_dim() const override { return scales_free_ ? 5 : 3; }
  int obs_dim() const override { return 1; }

  DataSet sample(const Vector& theta, int n, RngStream& rng) const override;
  double neg_log_lik(const Vector& theta, const DataSet& data) const override;
  double obs_neg_log_lik(const Vector& theta, const DataSet& data, int i) const override;
  Vector obs_grad(const Vector& theta, const DataSet& data, int i) const override;
  Matrix obs_hessian(const Vector& theta, const DataSet& data, int i) const override;

  Vector lower_bounds() const override;
  Vector upper_bounds() const override;
  Vector default_init(const DataSet& data) const override;
  Vector canonicalize(Vector theta) const override;

  double density(const Vector& theta, double x) const;

 private:
  MixtureModel(bool scales_free, double sigma1, double sigma2);
  // Unpacks theta into (lambda, mu1, s1, mu2, s2) for either parameterization.
  void unpack(const Vector& theta, double& lam, double& mu1, double& s1,
              double& mu2, double& s2) const;

  bool scales_free_;
  double sigma1_, sigma2_;  // fixed scales for the location variant
};

}  // namespace fimlab
