#include "fimlab/finite_diff.hpp"

#include <cmath>
#include <limits>

namespace fimlab {
namespace {

double probe(const ScalarFn& f, const Vector& x) {
  const double v = f(x);
  if (!std::isfinite(v)) {
    throw NonFiniteEvaluation("finite difference probe returned a non-finite value");
  }
  return v;
}

Vector scaled_steps(const Vector& theta, double base) {
  Vector h(theta.size());
  for (int j = 0; j < theta.size(); ++j) {
    h(j) = base * std::max(1.0, std::abs(theta(j)));
  }
  return h;
}

}  // namespace

Vector fd_default_steps(const Vector& theta) {
  return scaled_steps(theta, std::cbrt(std::numeric_limits<double>::epsilon()));
}

Vector fd_gradient(const ScalarFn& f, const Vector& theta, double h) {
  Vector steps = h > 0.0 ? Vector::Constant(theta.size(), h) : fd_default_steps(theta);
  Vector g(theta.size());
  Vector x = theta;
  for (int j = 0; j < theta.size(); ++j) {
    const double hj = steps(j);
    x(j) = theta(j) + hj;
    const double fp = probe(f, x);
    x(j) = theta(j) - hj;
    const double fm = probe(f, x);
    x(j) = theta(j);
    g(j) = (fp - fm) / (2.0 * hj);
  }
  return g;
}

Matrix fd_hessian(const ScalarFn& f, const Vector& theta, double h) {
  const int p = static_cast<int>(theta.size());
  // Second differences lose eps|f|/h^2 to roundoff, so the default step is
  // eps^(1/4), not the first-difference eps^(1/3).
  const double base = std::pow(std::numeric_limits<double>::epsilon(), 0.25);
  Vector steps = h > 0.0 ? Vector::Constant(p, h) : scaled_steps(theta, base);
  Matrix out(p, p);
  Vector x = theta;
  const double f0 = probe(f, x);
  for (int j = 0; j < p; ++j) {
    const double hj = steps(j);
    x(j) = theta(j) + hj;
    const double fp = probe(f, x);
    x(j) = theta(j) - hj;
    const double fm = probe(f, x);
    x(j) = theta(j);
    out(j, j) = (fp - 2.0 * f0 + fm) / (hj * hj);
    for (int k = j + 1; k < p; ++k) {
      const double hk = steps(k);
      x(j) = theta(j) + hj; x(k) = theta(k) + hk;
      const double fpp = probe(f, x);
      x(k) = theta(k) - hk;
      const double fpm = probe(f, x);
      x(j) = theta(j) - hj; x(k) = theta(k) + hk;
      const double fmp = probe(f, x);
      x(k) = theta(k) - hk;
      const double fmm = probe(f, x);
      x(j) = theta(j); x(k) = theta(k);
      out(j, k) = out(k, j) = (fpp - fpm - fmp + fmm) / (4.0 * hj * hk);
    }
  }
  return out;
}

}  // namespace fimlab
