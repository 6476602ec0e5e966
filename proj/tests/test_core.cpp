#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "fimlab/finite_diff.hpp"
#include "fimlab/linalg.hpp"
#include "fimlab/parallel.hpp"
#include "fimlab/rng.hpp"
#include "fimlab/stats.hpp"

using namespace fimlab;

namespace {

Matrix random_matrix(int rows, int cols, RngStream& rng) {
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = rng.normal();
  }
  return m;
}

// Independent check for the largest singular value: power iteration on m^T m.
double power_iteration_norm(const Matrix& m) {
  const Matrix a = m.transpose() * m;
  Vector v = Vector::Ones(a.rows()).normalized();
  for (int it = 0; it < 500; ++it) v = (a * v).normalized();
  return std::sqrt(v.dot(a * v));
}

}  // namespace

TEST_CASE("sym_inverse multiplies back to identity") {
  RngStream rng(42, 0);
  for (int rep = 0; rep < 10; ++rep) {
    const Matrix m = random_matrix(5, 5, rng);
    const SymMat spd(Matrix(m * m.transpose() + 0.5 * Matrix::Identity(5, 5)));
    const SymMat inv = sym_inverse(spd);
    const Matrix resid = spd.mat() * inv.mat() - Matrix::Identity(5, 5);
    CHECK(resid.cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("sym_inverse rejects indefinite input") {
  Matrix m = Matrix::Identity(3, 3);
  m(1, 1) = -1.0;
  CHECK_THROWS_AS(sym_inverse(SymMat(m)), NotPositiveDefinite);
  m(1, 1) = 0.0;
  CHECK_THROWS_AS(sym_inverse(SymMat(m)), NotPositiveDefinite);
}

TEST_CASE("SymMat symmetrizes tiny skew and rejects real asymmetry") {
  Matrix m(2, 2);
  m << 1.0, 0.5 + 1e-14, 0.5, 2.0;
  const SymMat s(m);
  CHECK(s(0, 1) == s(1, 0));
  m(0, 1) = 0.7;
  CHECK_THROWS_AS(SymMat{m}, Error);
  Matrix bad(2, 3);
  bad.setZero();
  CHECK_THROWS_AS(SymMat{bad}, Error);
}

TEST_CASE("spectral_norm matches power iteration and closed forms") {
  RngStream rng(7, 3);
  for (int rep = 0; rep < 8; ++rep) {
    const Matrix m = random_matrix(4, 6, rng);
    CHECK(spectral_norm(m) == doctest::Approx(power_iteration_norm(m)).epsilon(1e-9));
  }
  Matrix d = Matrix::Zero(3, 3);
  d.diagonal() << -4.0, 2.0, 1.0;
  CHECK(spectral_norm(d) == doctest::Approx(4.0));
  // Rank one: ||u v^T|| = |u| |v|.
  Vector u(2), v(3);
  u << 3.0, 4.0;
  v << 1.0, 2.0, 2.0;
  CHECK(spectral_norm(Matrix(u * v.transpose())) == doctest::Approx(15.0));
}

TEST_CASE("fd_gradient is exact on quadratics and accurate on smooth functions") {
  Matrix a(3, 3);
  a << 4.0, 1.0, 0.0,
       1.0, 3.0, -1.0,
       0.0, -1.0, 2.0;
  Vector b(3);
  b << 1.0, -2.0, 0.5;
  const ScalarFn quad = [&](const Vector& x) { return 0.5 * x.dot(a * x) + b.dot(x); };
  Vector x0(3);
  x0 << 0.3, -1.2, 2.0;
  const Vector g = fd_gradient(quad, x0);
  CHECK((g - (a * x0 + b)).cwiseAbs().maxCoeff() < 1e-9);

  const ScalarFn smooth = [](const Vector& x) {
    return std::sin(x(0)) * std::exp(0.5 * x(1)) + x(0) * x(1) * x(1);
  };
  Vector y0(2);
  y0 << 0.7, -0.4;
  Vector exact(2);
  exact << std::cos(0.7) * std::exp(-0.2) + 0.16, 0.5 * std::sin(0.7) * std::exp(-0.2) + 2 * 0.7 * (-0.4);
  const Vector gs = fd_gradient(smooth, y0);
  CHECK((gs - exact).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("fd_hessian matches analytic curvature") {
  Matrix a(3, 3);
  a << 4.0, 1.0, 0.0,
       1.0, 3.0, -1.0,
       0.0, -1.0, 2.0;
  const ScalarFn quad = [&](const Vector& x) { return 0.5 * x.dot(a * x); };
  Vector x0 = Vector::Constant(3, 0.8);
  CHECK((fd_hessian(quad, x0) - a).cwiseAbs().maxCoeff() < 1e-4);

  // Quartic with a known dense Hessian.
  const ScalarFn quart = [](const Vector& x) {
    return std::pow(x(0), 4) + x(0) * x(0) * x(1) + x(1) * x(1);
  };
  Vector y0(2);
  y0 << 1.1, -0.6;
  Matrix h(2, 2);
  h << 12.0 * 1.1 * 1.1 + 2.0 * (-0.6), 2.0 * 1.1,
       2.0 * 1.1, 2.0;
  const Matrix hfd = fd_hessian(quart, y0);
  CHECK((hfd - h).cwiseAbs().maxCoeff() / h.cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("fd probes reject non-finite values") {
  const ScalarFn bad = [](const Vector& x) {
    return x(0) > 0.5 ? std::numeric_limits<double>::infinity() : x(0);
  };
  Vector x0 = Vector::Constant(1, 0.5);
  CHECK_THROWS_AS(fd_gradient(bad, x0), NonFiniteEvaluation);
}

TEST_CASE("rng streams replay and are insensitive to parent consumption") {
  RngStream a(123, 9);
  RngStream b(123, 9);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  RngStream parent1(5, 1);
  RngStream parent2(5, 1);
  parent2.uniform();  // consuming the parent must not move children
  RngStream c1 = parent1.substream(77);
  RngStream c2 = parent2.substream(77);
  CHECK(c1.next_u64() == c2.next_u64());
  CHECK(parent1.substream("alpha").next_u64() != parent1.substream("beta").next_u64());
}

TEST_CASE("rng moments behave") {
  RngStream rng(2024, 0);
  const int n = 200000;
  double su = 0.0, su2 = 0.0, sn = 0.0, sn2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    su += u;
    su2 += u * u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
  }
  const double mu = su / n;
  const double varu = su2 / n - mu * mu;
  CHECK(std::abs(mu - 0.5) < 4.0 / std::sqrt(12.0 * n));
  CHECK(std::abs(varu - 1.0 / 12.0) < 0.002);
  CHECK(std::abs(sn / n) < 4.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(sn2 / n - 1.0) < 0.02);

  // Distinct streams look uncorrelated.
  RngStream s1(99, 1), s2(99, 2);
  double sxy = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0;
  const int m = 100000;
  for (int i = 0; i < m; ++i) {
    const double x = s1.normal(), y = s2.normal();
    sxy += x * y;
    sx += x; sy += y;
    sxx += x * x; syy += y * y;
  }
  const double corr = (sxy / m - sx / m * sy / m) /
      std::sqrt((sxx / m - sx / m * sx / m) * (syy / m - sy / m * sy / m));
  CHECK(std::abs(corr) < 0.02);
}

TEST_CASE("rng poisson mean and variance") {
  RngStream rng(11, 4);
  const double lambda = 2.0;
  const int n = 200000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double k = rng.poisson(lambda);
    s += k;
    s2 += k * k;
  }
  const double m = s / n;
  CHECK(std::abs(m - lambda) < 0.02);
  CHECK(std::abs((s2 / n - m * m) - lambda) < 0.05);
}

TEST_CASE("parallel_for fills every slot once and reduces deterministically") {
  const int n = 1000;
  for (int threads : {1, 3, 8}) {
    std::vector<double> slots(n, 0.0);
    parallel_for(n, threads, [&](int i) { slots[i] = std::sqrt(static_cast<double>(i)); });
    double sum = 0.0;
    for (double v : slots) sum += v;
    static double first_sum = sum;
    CHECK(sum == first_sum);  // identical reduction regardless of thread count
  }
  CHECK_THROWS_AS(parallel_for(4, 2, [](int i) {
    if (i == 2) throw Error("boom");
  }), Error);
}

TEST_CASE("paired t test matches a hand-computed case") {
  // diffs 1,2,3: mean 2, se 1/sqrt(3), t = 2 sqrt(3), df 2.
  // P(T > t) = 1 - (1/2 + t / (2 sqrt(2 + t^2))) = 0.037086.
  const PairedTTest t = paired_t_test({1.0, 2.0, 3.0});
  CHECK(t.t_stat == doctest::Approx(2.0 * std::sqrt(3.0)));
  CHECK(t.p_greater == doctest::Approx(0.0370858).epsilon(1e-4));
  CHECK(t.p_less == doctest::Approx(1.0 - 0.0370858).epsilon(1e-4));
  const PairedTTest d = paired_t_test({1.0, 1.0, 1.0});
  CHECK(d.degenerate);
}
