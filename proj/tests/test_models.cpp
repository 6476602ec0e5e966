#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "fimlab/finite_diff.hpp"
#include "fimlab/models/exp_family.hpp"
#include "fimlab/models/gaussian_mean.hpp"
#include "fimlab/models/mixture.hpp"
#include "fimlab/models/signal_plus_noise.hpp"
#include "fimlab/models/state_space.hpp"

using namespace fimlab;

namespace {

double norm_pdf(double x, double mu, double s) {
  const double z = (x - mu) / s;
  return std::exp(-0.5 * z * z) / (s * std::sqrt(2.0 * M_PI));
}

// Simpson integration, fine enough for smooth unimodal-ish densities.
double integrate(const std::function<double(double)>& f, double lo, double hi, int panels) {
  const double h = (hi - lo) / panels;
  double s = f(lo) + f(hi);
  for (int i = 1; i < panels; ++i) s += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

void check_obs_derivatives(const Model& model, const Vector& theta, const DataSet& data,
                           double grad_tol, double hess_tol) {
  const int p = static_cast<int>(theta.size());
  for (int i = 0; i < std::min(data.n(), 6); ++i) {
    const ScalarFn f = [&](const Vector& t) { return model.obs_neg_log_lik(t, data, i); };
    const Vector g_fd = fd_gradient(f, theta);
    const Vector g = model.obs_grad(theta, data, i);
    const double gscale = std::max(1.0, g_fd.cwiseAbs().maxCoeff());
    CHECK((g - g_fd).cwiseAbs().maxCoeff() / gscale < grad_tol);

    // Coarse check straight off the likelihood, then a sharp one off the
    // just-verified analytic gradient.
    const Matrix h = model.obs_hessian(theta, data, i);
    const Matrix h_fd = fd_hessian(f, theta);
    const double hscale = std::max(1.0, h_fd.cwiseAbs().maxCoeff());
    CHECK((h - h_fd).cwiseAbs().maxCoeff() / hscale < hess_tol);

    Matrix h_g(p, p);
    const double step = 1e-6;
    for (int j = 0; j < p; ++j) {
      Vector up = theta, dn = theta;
      up(j) += step;
      dn(j) -= step;
      h_g.col(j) = (model.obs_grad(up, data, i) - model.obs_grad(dn, data, i)) / (2.0 * step);
    }
    CHECK((h - 0.5 * (h_g + h_g.transpose())).cwiseAbs().maxCoeff() / hscale < 1e-6);
  }
}

}  // namespace

TEST_CASE("mixture density matches the two-component formula and integrates to one") {
  const MixtureModel loc = MixtureModel::location(1.0, 1.0);
  Vector th3(3);
  th3 << 0.35, -2.0, 1.5;
  for (double x : {-3.0, -0.7, 0.0, 2.2}) {
    const double want = 0.35 * norm_pdf(x, -2.0, 1.0) + 0.65 * norm_pdf(x, 1.5, 1.0);
    CHECK(loc.density(th3, x) == doctest::Approx(want).epsilon(1e-12));
  }
  CHECK(integrate([&](double x) { return loc.density(th3, x); }, -40.0, 40.0, 4000) ==
        doctest::Approx(1.0).epsilon(1e-8));

  const MixtureModel ls = MixtureModel::location_scale();
  Vector th5(5);
  th5 << 0.6, -1.0, 0.7, 2.0, 1.8;
  const double at0 = 0.6 * norm_pdf(0.0, -1.0, 0.7) + 0.4 * norm_pdf(0.0, 2.0, 1.8);
  CHECK(ls.density(th5, 0.0) == doctest::Approx(at0).epsilon(1e-12));
  CHECK(integrate([&](double x) { return ls.density(th5, x); }, -40.0, 40.0, 4000) ==
        doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("mixture analytic derivatives agree with finite differences") {
  RngStream rng(21, 0);
  const MixtureModel loc = MixtureModel::location(1.0, 1.0);
  Vector th3(3);
  th3 << 0.4, -1.2, 0.9;
  const DataSet d3 = loc.sample(th3, 6, rng);
  Vector probe3(3);
  probe3 << 0.55, -0.8, 1.4;
  check_obs_derivatives(loc, probe3, d3, 1e-7, 1e-4);

  const MixtureModel ls = MixtureModel::location_scale();
  Vector th5(5);
  th5 << 0.45, -1.0, 0.8, 1.3, 1.5;
  const DataSet d5 = ls.sample(th5, 6, rng);
  Vector probe5(5);
  probe5 << 0.5, -0.7, 1.1, 1.0, 1.2;
  check_obs_derivatives(ls, probe5, d5, 1e-7, 1e-4);
}

TEST_CASE("mixture sampler hits the component moments") {
  RngStream rng(77, 2);
  const MixtureModel ls = MixtureModel::location_scale();
  Vector th(5);
  th << 0.3, -2.0, 0.5, 1.0, 2.0;
  const int n = 200000;
  const DataSet d = ls.sample(th, n, rng);
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    s += d.scalar(i);
    s2 += d.scalar(i) * d.scalar(i);
  }
  const double mean = 0.3 * -2.0 + 0.7 * 1.0;
  const double ex2 = 0.3 * (0.25 + 4.0) + 0.7 * (4.0 + 1.0);
  CHECK(s / n == doctest::Approx(mean).epsilon(0.02));
  CHECK(s2 / n == doctest::Approx(ex2).epsilon(0.02));
}

TEST_CASE("mixture canonical ordering puts the left component first") {
  const MixtureModel loc = MixtureModel::location(1.0, 1.0);
  Vector th(3);
  th << 0.3, 2.0, -1.0;
  const Vector c = loc.canonicalize(th);
  CHECK(c(0) == doctest::Approx(0.7));
  CHECK(c(1) == doctest::Approx(-1.0));
  CHECK(c(2) == doctest::Approx(2.0));

  const MixtureModel ls = MixtureModel::location_scale();
  Vector th5(5);
  th5 << 0.2, 1.5, 0.6, -0.5, 1.1;
  const Vector c5 = ls.canonicalize(th5);
  CHECK(c5(0) == doctest::Approx(0.8));
  CHECK(c5(1) == doctest::Approx(-0.5));
  CHECK(c5(2) == doctest::Approx(1.1));
  CHECK(c5(3) == doctest::Approx(1.5));
  CHECK(c5(4) == doctest::Approx(0.6));
}

TEST_CASE("signal plus noise likelihood matches a direct multivariate normal") {
  const Matrix utu = SignalPlusNoiseModel::paper_utu();
  const SignalPlusNoiseModel model(utu);
  Vector theta(8);
  theta << 1.0, -0.5, 0.3, 2.0, 0.8, 1.2, 0.5, 1.5;
  RngStream rng(5, 5);
  const DataSet d = model.sample(theta, 5, rng);

  for (int i = 0; i < d.n(); ++i) {
    Matrix c = theta.tail(4).asDiagonal();
    c += std::sqrt(static_cast<double>(i + 1)) * utu;
    const Vector e = d.row(i) - theta.head(4);
    const Eigen::LLT<Matrix> llt(c);
    const double quad = e.dot(llt.solve(e));
    double logdet = 0.0;
    for (int j = 0; j < 4; ++j) logdet += 2.0 * std::log(llt.matrixL()(j, j));
    const double want = 0.5 * (quad + logdet + 4.0 * std::log(2.0 * M_PI));
    CHECK(model.obs_neg_log_lik(theta, d, i) == doctest::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("signal plus noise derivatives agree with finite differences") {
  const Matrix utu = SignalPlusNoiseModel::paper_utu().topLeftCorner(2, 2);
  const SignalPlusNoiseModel model(utu);
  Vector theta(4);
  theta << 0.5, -1.0, 1.2, 0.8;
  RngStream rng(9, 1);
  const DataSet d = model.sample(theta, 6, rng);
  Vector probe(4);
  probe << 0.3, -0.8, 1.0, 1.1;
  check_obs_derivatives(model, probe, d, 1e-6, 1e-4);
}

TEST_CASE("signal plus noise information matches the score outer product") {
  const Matrix utu = SignalPlusNoiseModel::paper_utu().topLeftCorner(2, 2);
  const SignalPlusNoiseModel model(utu);
  Vector theta(4);
  theta << 0.5, -1.0, 1.2, 0.8;
  const int n = 4;
  const SymMat fim = model.expected_fim(theta, n);

  RngStream rng(31, 7);
  const int reps = 40000;
  Matrix acc = Matrix::Zero(4, 4);
  for (int r = 0; r < reps; ++r) {
    const DataSet d = model.sample(theta, n, rng);
    const Vector u = model.grad(theta, d);
    acc += u * u.transpose();
  }
  acc /= reps;
  // Entrywise within Monte Carlo error, Frobenius within 3%.
  CHECK((acc - fim.mat()).norm() / fim.mat().norm() < 0.03);

  // Means and variances are orthogonal in this family.
  CHECK(fim.mat().topRightCorner(2, 2).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("signal plus noise sampler covariance tracks Sigma plus noise") {
  const Matrix utu = SignalPlusNoiseModel::paper_utu().topLeftCorner(2, 2);
  const SignalPlusNoiseModel model(utu);
  Vector theta(4);
  theta << 1.0, 2.0, 0.7, 1.3;
  RngStream rng(13, 3);
  const int reps = 60000;
  Vector mean = Vector::Zero(2);
  Matrix second = Matrix::Zero(2, 2);
  for (int r = 0; r < reps; ++r) {
    const DataSet d = model.sample(theta, 3, rng);
    const Vector x = d.row(2);  // third observation: Sigma + sqrt(3) UtU
    mean += x;
    second += x * x.transpose();
  }
  mean /= reps;
  second /= reps;
  const Matrix cov = second - mean * mean.transpose();
  Matrix want = theta.tail(2).asDiagonal();
  want += std::sqrt(3.0) * utu;
  CHECK((mean - theta.head(2)).cwiseAbs().maxCoeff() < 0.02);
  CHECK((cov - want).cwiseAbs().maxCoeff() < 0.03);
}

TEST_CASE("kalman likelihood equals the joint gaussian density") {
  const StateSpaceModel model = StateSpaceModel::paper_model();
  Vector theta(3);
  theta << 0.8, 1.7, 0.4;
  RngStream rng(17, 0);
  const int n = 12;
  const DataSet d = model.sample(theta, n, rng);

  // Joint covariance of (y_1..y_n) from the state recursion with x_0 = 0.
  Matrix a(3, 3);
  a << 0.0, 1.0, 0.0,
       0.0, 0.0, 1.0,
       0.8, 0.8, -0.8;
  Matrix c(1, 3);
  c << 1.0, 0.0, 0.0;
  const double r = 1.0;
  const Matrix q = theta.asDiagonal();

  std::vector<Matrix> var_x(n + 1, Matrix::Zero(3, 3));
  for (int t = 1; t <= n; ++t) var_x[t] = a * var_x[t - 1] * a.transpose() + q;
  Matrix cov_y(n, n);
  for (int t = 1; t <= n; ++t) {
    for (int s = 1; s <= t; ++s) {
      Matrix cross = var_x[s];
      for (int k = s; k < t; ++k) cross = a * cross;
      double v = (c * cross * c.transpose())(0, 0);
      if (t == s) v += r;
      cov_y(t - 1, s - 1) = v;
      cov_y(s - 1, t - 1) = v;
    }
  }
  Vector y(n);
  for (int i = 0; i < n; ++i) y(i) = d.scalar(i);
  const Eigen::LLT<Matrix> llt(cov_y);
  double logdet = 0.0;
  for (int i = 0; i < n; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  const double oracle = 0.5 * (y.dot(llt.solve(y)) + logdet + n * std::log(2.0 * M_PI));

  CHECK(model.neg_log_lik(theta, d) == doctest::Approx(oracle).epsilon(1e-10));
}

TEST_CASE("state space first output has the predicted variance") {
  const StateSpaceModel model = StateSpaceModel::paper_model();
  Vector theta(3);
  theta << 1.0, 0.5, 2.0;
  RngStream rng(23, 4);
  const int reps = 50000;
  double s = 0.0, s2 = 0.0;
  for (int r = 0; r < reps; ++r) {
    const DataSet d = model.sample(theta, 2, rng);
    s += d.scalar(0);
    s2 += d.scalar(0) * d.scalar(0);
  }
  // y_1 = C x_1 + v, x_1 ~ N(0, Q): var = Q_11 + R = 2.
  const double var = s2 / reps - (s / reps) * (s / reps);
  CHECK(std::abs(s / reps) < 0.03);
  CHECK(var == doctest::Approx(2.0).epsilon(0.03));
}

TEST_CASE("state space gradient agrees with an independent finite difference") {
  const StateSpaceModel model = StateSpaceModel::paper_model();
  Vector theta(3);
  theta << 0.9, 1.1, 0.7;
  RngStream rng(29, 1);
  const DataSet d = model.sample(theta, 30, rng);
  const Vector g = model.grad(theta, d);
  // Same quantity from one-sided differences at a different step size.
  const double h = 1e-5;
  Vector g2(3);
  for (int j = 0; j < 3; ++j) {
    Vector up = theta, dn = theta;
    up(j) += h;
    dn(j) -= h;
    g2(j) = (model.neg_log_lik(up, d) - model.neg_log_lik(dn, d)) / (2.0 * h);
  }
  CHECK((g - g2).cwiseAbs().maxCoeff() < 1e-4 * std::max(1.0, g2.cwiseAbs().maxCoeff()));
}

TEST_CASE("exponential family likelihood and score identities") {
  const ExpFamilyModel pois = ExpFamilyModel::poisson();
  Matrix obs(4, 1);
  obs << 0.0, 3.0, 1.0, 7.0;
  const DataSet d{obs};
  Vector th(1);
  th << 2.5;
  for (int i = 0; i < 4; ++i) {
    const double x = obs(i, 0);
    const double want = -(x * std::log(2.5) - 2.5 - std::lgamma(x + 1.0));
    CHECK(pois.obs_neg_log_lik(th, d, i) == doctest::Approx(want).epsilon(1e-12));
    CHECK(pois.obs_grad(th, d, i)(0) == doctest::Approx(1.0 - x / 2.5).epsilon(1e-12));
    CHECK(pois.obs_hessian(th, d, i)(0, 0) == doctest::Approx(x / (2.5 * 2.5)).epsilon(1e-12));
  }
  CHECK(pois.expected_fim(th, 10)(0, 0) == doctest::Approx(10.0 / 2.5).epsilon(1e-12));

  const ExpFamilyModel expo = ExpFamilyModel::exponential_rate();
  Matrix eobs(2, 1);
  eobs << 0.4, 2.0;
  const DataSet ed{eobs};
  Vector et(1);
  et << 1.7;
  const double nll = expo.neg_log_lik(et, ed);
  CHECK(nll == doctest::Approx(-2.0 * std::log(1.7) + 1.7 * 2.4).epsilon(1e-12));
  CHECK(expo.expected_fim(et, 5)(0, 0) == doctest::Approx(5.0 / (1.7 * 1.7)).epsilon(1e-12));
}

TEST_CASE("curvature gap identity holds exactly off the optimum") {
  RngStream rng(41, 6);
  for (const ExpFamilyModel& model :
       {ExpFamilyModel::poisson(), ExpFamilyModel::exponential_rate(),
        ExpFamilyModel::gaussian_mean(1.3)}) {
    Vector truth(1);
    truth << 1.8;
    const DataSet d = model.sample(truth, 25, rng);
    for (double th : {1.2, 1.8, 2.6}) {
      Vector t(1);
      t << th;
      double hbar = 0.0;
      for (int i = 0; i < d.n(); ++i) hbar += model.obs_hessian(t, d, i)(0, 0);
      hbar /= d.n();
      const double fbar = model.expected_fim(t, d.n())(0, 0) / d.n();
      CHECK(lemma6_gap(model, d, th) == doctest::Approx(hbar - fbar).epsilon(1e-10));
    }
  }
}

TEST_CASE("exponential family samplers hit their means") {
  RngStream rng(51, 2);
  const ExpFamilyModel pois = ExpFamilyModel::poisson();
  const ExpFamilyModel expo = ExpFamilyModel::exponential_rate();
  Vector th(1);
  th << 3.0;
  const int n = 100000;
  const DataSet dp = pois.sample(th, n, rng);
  const DataSet de = expo.sample(th, n, rng);
  double sp = 0.0, se = 0.0;
  for (int i = 0; i < n; ++i) {
    sp += dp.scalar(i);
    se += de.scalar(i);
  }
  CHECK(sp / n == doctest::Approx(3.0).epsilon(0.01));
  CHECK(se / n == doctest::Approx(1.0 / 3.0).epsilon(0.01));
}

TEST_CASE("gaussian mean vector model is exactly quadratic") {
  Matrix cov(2, 2);
  cov << 2.0, 0.6, 0.6, 1.0;
  const GaussianMeanModel model{SymMat(cov)};
  RngStream rng(61, 1);
  Vector truth(2);
  truth << 0.5, -1.0;
  const int n = 20;
  const DataSet d = model.sample(truth, n, rng);

  const Matrix prec = cov.inverse();
  Vector xbar = Vector::Zero(2);
  for (int i = 0; i < n; ++i) xbar += d.row(i);
  xbar /= n;

  // Gradient is linear in theta and vanishes at the sample mean.
  CHECK(model.grad(xbar, d).cwiseAbs().maxCoeff() < 1e-10);
  Vector t(2);
  t << 2.0, 3.0;
  const Vector g = model.grad(t, d);
  const Vector want = n * prec * (t - xbar);
  CHECK((g - want).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((model.hessian(t, d).mat() - n * prec).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((model.expected_fim(t, n).mat() - n * prec).cwiseAbs().maxCoeff() < 1e-10);

  // Sample covariance of draws matches cov.
  const int reps = 80000;
  Matrix second = Matrix::Zero(2, 2);
  Vector mean = Vector::Zero(2);
  for (int r = 0; r < reps; ++r) {
    const DataSet one = model.sample(truth, 1, rng);
    mean += one.row(0);
    second += one.row(0) * one.row(0).transpose();
  }
  mean /= reps;
  second /= reps;
  CHECK(((second - mean * mean.transpose()) - cov).cwiseAbs().maxCoeff() < 0.05);
}
