#include "fimlab/models/state_space.hpp"

#include <cmath>
#include <numbers>

#include "fimlab/errors.hpp"
#include "fimlab/finite_diff.hpp"

namespace fimlab {

StateSpaceModel::StateSpaceModel(Matrix a, Matrix c, double r, Vector mu0, Matrix sigma0)
    : l_(static_cast<int>(a.rows())), a_(std::move(a)), c_(std::move(c)), r_(r),
      mu0_(std::move(mu0)), sigma0_(std::move(sigma0)) {
  if (a_.rows() != a_.cols()) throw Error("StateSpaceModel: A must be square");
  if (c_.rows() != 1 || c_.cols() != l_) throw Error("StateSpaceModel: C must be 1 x l");
  if (mu0_.size() != l_ || sigma0_.rows() != l_ || sigma0_.cols() != l_) {
    throw Error("StateSpaceModel: initial moments have wrong size");
  }
  if (r_ <= 0.0) throw Error("StateSpaceModel: R must be positive");
}

StateSpaceModel StateSpaceModel::paper_model() {
  Matrix a(3, 3);
  a << 0.0, 1.0, 0.0,
       0.0, 0.0, 1.0,
       0.8, 0.8, -0.8;
  Matrix c(1, 3);
  c << 1.0, 0.0, 0.0;
  return StateSpaceModel(a, c, 1.0, Vector::Zero(3), Matrix::Zero(3, 3));
}

DataSet StateSpaceModel::sample(const Vector& theta, int n, RngStream& rng) const {
  if (theta.size() != l_) throw Error("StateSpaceModel: bad parameter size");
  if ((theta.array() < 0.0).any()) throw Error("StateSpaceModel: negative variance");
  Vector x = mu0_;
  if (!sigma0_.isZero(0.0)) {
    Eigen::LLT<Matrix> llt0(sigma0_);
    if (llt0.info() != Eigen::Success) {
      throw NotPositiveDefinite("StateSpaceModel: Sigma0 not PD");
    }
    Vector z(l_);
    for (int j = 0; j < l_; ++j) z(j) = rng.normal();
    x += Matrix(llt0.matrixL()) * z;
  }
  const Vector wsd = theta.cwiseSqrt();
  Matrix obs(n, 1);
  for (int t = 0; t < n; ++t) {
    Vector w(l_);
    for (int j = 0; j < l_; ++j) w(j) = wsd(j) * rng.normal();
    x = a_ * x + w;
    obs(t, 0) = (c_ * x)(0, 0) + std::sqrt(r_) * rng.normal();
  }
  return DataSet(std::move(obs));
}

KalmanRun StateSpaceModel::kalman_filter(const Vector& theta, const DataSet& data) const {
  if (theta.size() != l_) throw Error("StateSpaceModel: bad parameter size");
  const int n = data.n();
  Matrix q = Matrix::Zero(l_, l_);
  q.diagonal() = theta;
  KalmanRun run;
  run.innovations.resize(n);
  run.innovation_vars.resize(n);
  run.filtered_means.resize(n, l_);
  run.filtered_covs.reserve(n);
  Vector x = mu0_;
  Matrix p = sigma0_;
  for (int t = 0; t < n; ++t) {
    const Vector x_pred = a_ * x;
    const Matrix p_pred = a_ * p * a_.transpose() + q;
    const double s = (c_ * p_pred * c_.transpose())(0, 0) + r_;
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw SingularInnovation("kalman_filter: nonpositive innovation variance");
    }
    const double eps = data.scalar(t) - (c_ * x_pred)(0, 0);
    const Vector k = p_pred * c_.transpose() / s;
    x = x_pred + k * eps;
    p = p_pred - k * (c_ * p_pred);
    p = 0.5 * (p + p.transpose());
    run.innovations(t) = eps;
    run.innovation_vars(t) = s;
    run.filtered_means.row(t) = x.transpose();
    run.filtered_covs.push_back(p);
  }
  return run;
}

double StateSpaceModel::neg_log_lik(const Vector& theta, const DataSet& data) const {
  const KalmanRun run = kalman_filter(theta, data);
  double nll = 0.5 * data.n() * std::log(2.0 * std::numbers::pi);
  for (int t = 0; t < data.n(); ++t) {
    nll += 0.5 * (std::log(run.innovation_vars(t)) +
                  run.innovations(t) * run.innovations(t) / run.innovation_vars(t));
  }
  if (!std::isfinite(nll)) throw NonFiniteEvaluation("state_space: non-finite likelihood");
  return nll;
}

Vector StateSpaceModel::grad(const Vector& theta, const DataSet& data) const {
  return fd_gradient([&](const Vector& t) { return neg_log_lik(t, data); }, theta);
}

SymMat StateSpaceModel::hessian(const Vector& theta, const DataSet& data) const {
  Matrix h = fd_hessian([&](const Vector& t) { return neg_log_lik(t, data); }, theta);
  return SymMat(std::move(h));
}

Vector StateSpaceModel::lower_bounds() const { return Vector::Constant(l_, 1e-8); }

Vector StateSpaceModel::default_init(const DataSet& data) const {
  // Crude but scale-aware: spread the observed variance across the states.
  const double var = (data.matrix().col(0).array() - data.matrix().col(0).mean()).square().sum() /
                     std::max(data.n() - 1, 1);
  return Vector::Constant(l_, std::max(0.5 * var / l_, 0.05));
}

Vector StateSpaceModel::search_box_lo() const { return Vector::Constant(l_, 1e-6); }
Vector StateSpaceModel::search_box_hi() const { return Vector::Constant(l_, 8.0); }

}  // namespace fimlab
