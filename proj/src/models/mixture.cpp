#include "fimlab/models/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "fimlab/errors.hpp"

namespace fimlab {

MixtureModel::MixtureModel(bool scales_free, double sigma1, double sigma2)
    : scales_free_(scales_free), sigma1_(sigma1), sigma2_(sigma2) {}

MixtureModel MixtureModel::location(double sigma1, double sigma2) {
  if (sigma1 <= 0.0 || sigma2 <= 0.0) throw Error("MixtureModel: scales must be positive");
  return MixtureModel(false, sigma1, sigma2);
}

MixtureModel MixtureModel::location_scale() { return MixtureModel(true, 1.0, 1.0); }

std::string MixtureModel::name() const {
  return scales_free_ ? "mixture_location_scale" : "mixture_location";
}

void MixtureModel::unpack(const Vector& theta, double& lam, double& mu1, double& s1,
                          double& mu2, double& s2) const {
  if (theta.size() != param_dim()) throw Error("MixtureModel: bad parameter size");
  lam = theta(0);
  if (scales_free_) {
    mu1 = theta(1); s1 = theta(2); mu2 = theta(3); s2 = theta(4);
  } else {
    mu1 = theta(1); mu2 = theta(2); s1 = sigma1_; s2 = sigma2_;
  }
  if (s1 <= 0.0 || s2 <= 0.0) throw Error("MixtureModel: nonpositive scale");
}

namespace {

double normal_pdf(double x, double mu, double s) {
  const double z = (x - mu) / s;
  return std::exp(-0.5 * z * z) / (s * std::sqrt(2.0 * std::numbers::pi));
}

}  // namespace

double MixtureModel::density(const Vector& theta, double x) const {
  double lam, mu1, s1, mu2, s2;
  unpack(theta, lam, mu1, s1, mu2, s2);
  return lam * normal_pdf(x, mu1, s1) + (1.0 - lam) * normal_pdf(x, mu2, s2);
}

DataSet MixtureModel::sample(const Vector& theta, int n, RngStream& rng) const {
  double lam, mu1, s1, mu2, s2;
  unpack(theta, lam, mu1, s1, mu2, s2);
  Matrix obs(n, 1);
  for (int i = 0; i < n; ++i) {
    if (rng.uniform() < lam) {
      obs(i, 0) = mu1 + s1 * rng.normal();
    } else {
      obs(i, 0) = mu2 + s2 * rng.normal();
    }
  }
  return DataSet(std::move(obs));
}

double MixtureModel::obs_neg_log_lik(const Vector& theta, const DataSet& data, int i) const {
  const double f = density(theta, data.scalar(i));
  if (f <= 0.0) throw DegenerateMixture("mixture density underflow");
  return -std::log(f);
}

double MixtureModel::neg_log_lik(const Vector& theta, const DataSet& data) const {
  double nll = 0.0;
  for (int i = 0; i < data.n(); ++i) nll += obs_neg_log_lik(theta, data, i);
  return nll;
}

Vector MixtureModel::obs_grad(const Vector& theta, const DataSet& data, int i) const {
  double lam, mu1, s1, mu2, s2;
  unpack(theta, lam, mu1, s1, mu2, s2);
  const double x = data.scalar(i);
  const double p1 = normal_pdf(x, mu1, s1), p2 = normal_pdf(x, mu2, s2);
  const double f = lam * p1 + (1.0 - lam) * p2;
  if (f <= 0.0) throw DegenerateMixture("mixture density underflow");
  const double a1 = (x - mu1) / (s1 * s1), a2 = (x - mu2) / (s2 * s2);
  Vector df(param_dim());
  if (scales_free_) {
    const double b1 = (x - mu1) * (x - mu1) / (s1 * s1 * s1) - 1.0 / s1;
    const double b2 = (x - mu2) * (x - mu2) / (s2 * s2 * s2) - 1.0 / s2;
    df << p1 - p2, lam * p1 * a1, lam * p1 * b1,
        (1.0 - lam) * p2 * a2, (1.0 - lam) * p2 * b2;
  } else {
    df << p1 - p2, lam * p1 * a1, (1.0 - lam) * p2 * a2;
  }
  return -df / f;
}

Matrix MixtureModel::obs_hessian(const Vector& theta, const DataSet& data, int i) const {
  double lam, mu1, s1, mu2, s2;
  unpack(theta, lam, mu1, s1, mu2, s2);
  const double x = data.scalar(i);
  const double p1 = normal_pdf(x, mu1, s1), p2 = normal_pdf(x, mu2, s2);
  const double f = lam * p1 + (1.0 - lam) * p2;
  if (f <= 0.0) throw DegenerateMixture("mixture density underflow");
  const int p = param_dim();
  Vector df(p);
  Matrix d2f = Matrix::Zero(p, p);
  const double a1 = (x - mu1) / (s1 * s1), a2 = (x - mu2) / (s2 * s2);
  // Second derivatives of each component density, then weighted assembly.
  const double dmm1 = a1 * a1 - 1.0 / (s1 * s1);
  const double dmm2 = a2 * a2 - 1.0 / (s2 * s2);
  if (scales_free_) {
    const double b1 = (x - mu1) * (x - mu1) / (s1 * s1 * s1) - 1.0 / s1;
    const double b2 = (x - mu2) * (x - mu2) / (s2 * s2 * s2) - 1.0 / s2;
    const double dms1 = a1 * b1 - 2.0 * a1 / s1;
    const double dms2 = a2 * b2 - 2.0 * a2 / s2;
    const double dss1 = b1 * b1 - 3.0 * (x - mu1) * (x - mu1) / (s1 * s1 * s1 * s1) + 1.0 / (s1 * s1);
    const double dss2 = b2 * b2 - 3.0 * (x - mu2) * (x - mu2) / (s2 * s2 * s2 * s2) + 1.0 / (s2 * s2);
    df << p1 - p2, lam * p1 * a1, lam * p1 * b1,
        (1.0 - lam) * p2 * a2, (1.0 - lam) * p2 * b2;
    d2f(0, 1) = d2f(1, 0) = p1 * a1;
    d2f(0, 2) = d2f(2, 0) = p1 * b1;
    d2f(0, 3) = d2f(3, 0) = -p2 * a2;
    d2f(0, 4) = d2f(4, 0) = -p2 * b2;
    d2f(1, 1) = lam * p1 * dmm1;
    d2f(1, 2) = d2f(2, 1) = lam * p1 * dms1;
    d2f(2, 2) = lam * p1 * dss1;
    d2f(3, 3) = (1.0 - lam) * p2 * dmm2;
    d2f(3, 4) = d2f(4, 3) = (1.0 - lam) * p2 * dms2;
    d2f(4, 4) = (1.0 - lam) * p2 * dss2;
  } else {
    df << p1 - p2, lam * p1 * a1, (1.0 - lam) * p2 * a2;
    d2f(0, 1) = d2f(1, 0) = p1 * a1;
    d2f(0, 2) = d2f(2, 0) = -p2 * a2;
    d2f(1, 1) = lam * p1 * dmm1;
    d2f(2, 2) = (1.0 - lam) * p2 * dmm2;
  }
  return -(d2f / f - (df / f) * (df / f).transpose());
}

Vector MixtureModel::lower_bounds() const {
  Vector lo(param_dim());
  if (scales_free_) {
    lo << 1e-8, -std::numeric_limits<double>::infinity(), 1e-8,
        -std::numeric_limits<double>::infinity(), 1e-8;
  } else {
    lo << 1e-8, -std::numeric_limits<double>::infinity(),
        -std::numeric_limits<double>::infinity();
  }
  return lo;
}

Vector MixtureModel::upper_bounds() const {
  Vector hi = Vector::Constant(param_dim(), std::numeric_limits<double>::infinity());
  hi(0) = 1.0 - 1e-8;
  return hi;
}

Vector MixtureModel::default_init(const DataSet& data) const {
  std::vector<double> xs(data.n());
  for (int i = 0; i < data.n(); ++i) xs[i] = data.scalar(i);
  std::sort(xs.begin(), xs.end());
  const auto quantile = [&](double q) {
    const double pos = q * (xs.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, xs.size() - 1);
    return xs[lo] + (pos - lo) * (xs[hi] - xs[lo]);
  };
  Vector init(param_dim());
  if (scales_free_) {
    double m = 0.0, v = 0.0;
    for (double x : xs) m += x;
    m /= xs.size();
    for (double x : xs) v += (x - m) * (x - m);
    const double sd = std::sqrt(v / std::max<std::size_t>(xs.size() - 1, 1));
    init << 0.5, quantile(0.25), 0.5 * sd, quantile(0.75), 0.5 * sd;
  } else {
    init << 0.5, quantile(0.25), quantile(0.75);
  }
  return init;
}

Vector MixtureModel::canonicalize(Vector theta) const {
  // Fix the label switch: keep mu1 <= mu2.
  const int i1 = 1, i2 = scales_free_ ? 3 : 2;
  if (theta(i1) > theta(i2)) {
    std::swap(theta(i1), theta(i2));
    if (scales_free_) std::swap(theta(2), theta(4));
    theta(0) = 1.0 - theta(0);
  }
  return theta;
}

}  // namespace fimlab
