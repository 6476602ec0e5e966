#pragma once

#include <functional>
#include <limits>

#include "fimlab/model.hpp"

namespace fimlab {

// Scalar one-parameter exponential family
//   p(x | theta) = h(x) exp(eta(theta) T(x) - A(theta)).
// Instances carry eta/A and their derivatives so the curvature identities can
// be evaluated exactly.
class ExpFamilyModel : public Model {
 public:
  struct Spec {
    std::string name;
    std::function<double(double)> eta, d_eta, d2_eta, d3_eta;
    std::function<double(double)> big_a, d_big_a, d2_big_a, d3_big_a;
    std::function<double(double)> log_h;
    std::function<double(double)> suff;     // T(x)
    std::function<double(double)> mean_suff; // E_theta T(X)
    std::function<double(double, RngStream&)> draw;
    std::function<double(const DataSet&)> init;
    double theta_lo = 1e-8;
    double theta_hi = std::numeric_limits<double>::infinity();
    bool discrete = false;
  };

  explicit ExpFamilyModel(Spec spec);

  static ExpFamilyModel poisson();
  static ExpFamilyModel exponential_rate();
  static ExpFamilyModel gaussian_mean(double sigma);

  std::string name() const override { return spec_.name; }
  int param_dim() const override { return 1; }
  int obs_dim() const override { return 1; }

  DataSet sample(const Vector& theta, int n, RngStream& rng) const override;
  double neg_log_lik(const Vector& theta, const DataSet& data) const override;
  double obs_neg_log_lik(const Vector& theta, const DataSet& data, int i) const override;
  Vector obs_grad(const Vector& theta, const DataSet& data, int i) const override;
  Matrix obs_hessian(const Vector& theta, const DataSet& data, int i) const override;

  bool has_analytic_fim() const override { return true; }
  SymMat expected_fim(const Vector& theta, int n) const override;

  Vector lower_bounds() const override;
  Vector upper_bounds() const override;
  Vector default_init(const DataSet& data) const override;

  const Spec& spec() const { return spec_; }

 private:
  Spec spec_;
};

// Difference between the two averaged-information matrices at theta_hat,
// scaled per observation: returns d2_eta(theta_hat) *
// (mean_suff(theta_hat) - sample mean of T), which equals
// observed_avg - expected_avg for this family.
double lemma6_gap(const ExpFamilyModel& model, const DataSet& data, double theta_hat);

}  // namespace fimlab
