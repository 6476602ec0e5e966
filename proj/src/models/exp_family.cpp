#include "fimlab/models/exp_family.hpp"

#include <cmath>
#include <numbers>

#include "fimlab/errors.hpp"

namespace fimlab {

ExpFamilyModel::ExpFamilyModel(Spec spec) : spec_(std::move(spec)) {}

ExpFamilyModel ExpFamilyModel::poisson() {
  Spec s;
  s.name = "poisson";
  s.eta = [](double t) { return std::log(t); };
  s.d_eta = [](double t) { return 1.0 / t; };
  s.d2_eta = [](double t) { return -1.0 / (t * t); };
  s.d3_eta = [](double t) { return 2.0 / (t * t * t); };
  s.big_a = [](double t) { return t; };
  s.d_big_a = [](double) { return 1.0; };
  s.d2_big_a = [](double) { return 0.0; };
  s.d3_big_a = [](double) { return 0.0; };
  s.log_h = [](double x) { return -std::lgamma(x + 1.0); };
  s.suff = [](double x) { return x; };
  s.mean_suff = [](double t) { return t; };
  s.draw = [](double t, RngStream& rng) { return static_cast<double>(rng.poisson(t)); };
  s.init = [](const DataSet& d) { return std::max(d.matrix().col(0).mean(), 1e-3); };
  s.discrete = true;
  return ExpFamilyModel(std::move(s));
}

ExpFamilyModel ExpFamilyModel::exponential_rate() {
  Spec s;
  s.name = "exponential_rate";
  s.eta = [](double t) { return -t; };
  s.d_eta = [](double) { return -1.0; };
  s.d2_eta = [](double) { return 0.0; };
  s.d3_eta = [](double) { return 0.0; };
  s.big_a = [](double t) { return -std::log(t); };
  s.d_big_a = [](double t) { return -1.0 / t; };
  s.d2_big_a = [](double t) { return 1.0 / (t * t); };
  s.d3_big_a = [](double t) { return -2.0 / (t * t * t); };
  s.log_h = [](double) { return 0.0; };
  s.suff = [](double x) { return x; };
  s.mean_suff = [](double t) { return 1.0 / t; };
  s.draw = [](double t, RngStream& rng) { return -std::log(1.0 - rng.uniform()) / t; };
  s.init = [](const DataSet& d) { return 1.0 / std::max(d.matrix().col(0).mean(), 1e-8); };
  return ExpFamilyModel(std::move(s));
}

ExpFamilyModel ExpFamilyModel::gaussian_mean(double sigma) {
  if (sigma <= 0.0) throw Error("gaussian_mean: sigma must be positive");
  const double s2 = sigma * sigma;
  Spec s;
  s.name = "gaussian_mean";
  s.eta = [s2](double t) { return t / s2; };
  s.d_eta = [s2](double) { return 1.0 / s2; };
  s.d2_eta = [](double) { return 0.0; };
  s.d3_eta = [](double) { return 0.0; };
  s.big_a = [s2](double t) { return t * t / (2.0 * s2); };
  s.d_big_a = [s2](double t) { return t / s2; };
  s.d2_big_a = [s2](double) { return 1.0 / s2; };
  s.d3_big_a = [](double) { return 0.0; };
  s.log_h = [s2, sigma](double x) {
    return -x * x / (2.0 * s2) - std::log(sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
  };
  s.suff = [](double x) { return x; };
  s.mean_suff = [](double t) { return t; };
  s.draw = [sigma](double t, RngStream& rng) { return t + sigma * rng.normal(); };
  s.init = [](const DataSet& d) { return d.matrix().col(0).mean(); };
  s.theta_lo = -std::numeric_limits<double>::infinity();
  return ExpFamilyModel(std::move(s));
}

DataSet ExpFamilyModel::sample(const Vector& theta, int n, RngStream& rng) const {
  Matrix obs(n, 1);
  for (int i = 0; i < n; ++i) obs(i, 0) = spec_.draw(theta(0), rng);
  return DataSet(std::move(obs));
}

double ExpFamilyModel::obs_neg_log_lik(const Vector& theta, const DataSet& data, int i) const {
  const double x = data.scalar(i);
  return -(spec_.log_h(x) + spec_.eta(theta(0)) * spec_.suff(x) - spec_.big_a(theta(0)));
}

double ExpFamilyModel::neg_log_lik(const Vector& theta, const DataSet& data) const {
  double nll = 0.0;
  for (int i = 0; i < data.n(); ++i) nll += obs_neg_log_lik(theta, data, i);
  return nll;
}

Vector ExpFamilyModel::obs_grad(const Vector& theta, const DataSet& data, int i) const {
  Vector g(1);
  g(0) = -spec_.d_eta(theta(0)) * spec_.suff(data.scalar(i)) + spec_.d_big_a(theta(0));
  return g;
}

Matrix ExpFamilyModel::obs_hessian(const Vector& theta, const DataSet& data, int i) const {
  Matrix h(1, 1);
  h(0, 0) = -spec_.d2_eta(theta(0)) * spec_.suff(data.scalar(i)) + spec_.d2_big_a(theta(0));
  return h;
}

SymMat ExpFamilyModel::expected_fim(const Vector& theta, int n) const {
  Matrix f(1, 1);
  f(0, 0) = n * (-spec_.d2_eta(theta(0)) * spec_.mean_suff(theta(0)) + spec_.d2_big_a(theta(0)));
  return SymMat(std::move(f));
}

Vector ExpFamilyModel::lower_bounds() const { return Vector::Constant(1, spec_.theta_lo); }

Vector ExpFamilyModel::upper_bounds() const { return Vector::Constant(1, spec_.theta_hi); }

Vector ExpFamilyModel::default_init(const DataSet& data) const {
  return Vector::Constant(1, spec_.init(data));
}

double lemma6_gap(const ExpFamilyModel& model, const DataSet& data, double theta_hat) {
  const auto& s = model.spec();
  double tbar = 0.0;
  for (int i = 0; i < data.n(); ++i) tbar += s.suff(data.scalar(i));
  tbar /= data.n();
  return s.d2_eta(theta_hat) * (s.mean_suff(theta_hat) - tbar);
}

}  // namespace fimlab
