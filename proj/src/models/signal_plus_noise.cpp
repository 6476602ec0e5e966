#include "fimlab/models/signal_plus_noise.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "fimlab/errors.hpp"

namespace fimlab {

SignalPlusNoiseModel::SignalPlusNoiseModel(Matrix utu)
    : q_(static_cast<int>(utu.rows())), utu_(std::move(utu)) {
  if (utu_.rows() != utu_.cols() || utu_.rows() < 1) {
    throw Error("SignalPlusNoiseModel: UtU must be square");
  }
  if ((utu_ - utu_.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw Error("SignalPlusNoiseModel: UtU must be symmetric");
  }
  // Rounded published values can be marginally indefinite; clamp at zero.
  Eigen::SelfAdjointEigenSolver<Matrix> es(utu_);
  Vector ev = es.eigenvalues().cwiseMax(0.0);
  utu_sqrt_ = es.eigenvectors() * ev.cwiseSqrt().asDiagonal();
}

Matrix SignalPlusNoiseModel::paper_utu() {
  Matrix m(4, 4);
  m << 0.0289, 0.0219, 0.0120, 0.0216,
       0.0219, 0.0200, 0.0068, 0.0189,
       0.0120, 0.0068, 0.0076, 0.0053,
       0.0216, 0.0189, 0.0053, 0.0210;
  return m;
}

Matrix SignalPlusNoiseModel::noise_cov(int i) const {
  return std::sqrt(static_cast<double>(i)) * utu_;
}

Matrix SignalPlusNoiseModel::obs_cov(const Vector& theta, int i) const {
  Matrix c = noise_cov(i);
  c.diagonal() += theta.tail(q_);
  return c;
}

DataSet SignalPlusNoiseModel::sample(const Vector& theta, int n, RngStream& rng) const {
  if (theta.size() != param_dim()) throw Error("SignalPlusNoiseModel: bad parameter size");
  const Vector mu = theta.head(q_);
  const Vector sig = theta.tail(q_);
  if ((sig.array() < 0.0).any()) throw Error("SignalPlusNoiseModel: negative variance");
  Matrix obs(n, q_);
  Vector z1(q_), z2(q_);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < q_; ++j) z1(j) = rng.normal();
    for (int j = 0; j < q_; ++j) z2(j) = rng.normal();
    const double scale = std::pow(static_cast<double>(i + 1), 0.25);
    obs.row(i) = (mu + sig.cwiseSqrt().cwiseProduct(z1) + scale * (utu_sqrt_ * z2)).transpose();
  }
  return DataSet(std::move(obs));
}

double SignalPlusNoiseModel::obs_neg_log_lik(const Vector& theta, const DataSet& data, int i) const {
  const Matrix c = obs_cov(theta, i + 1);
  Eigen::LLT<Matrix> llt(c);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("signal_plus_noise: covariance not PD");
  }
  const Vector e = data.row(i) - theta.head(q_);
  const Vector w = llt.solve(e);
  double logdet = 0.0;
  for (int j = 0; j < q_; ++j) logdet += 2.0 * std::log(llt.matrixL()(j, j));
  return 0.5 * (q_ * std::log(2.0 * std::numbers::pi) + logdet + e.dot(w));
}

double SignalPlusNoiseModel::neg_log_lik(const Vector& theta, const DataSet& data) const {
  double nll = 0.0;
  for (int i = 0; i < data.n(); ++i) nll += obs_neg_log_lik(theta, data, i);
  return nll;
}

Vector SignalPlusNoiseModel::obs_grad(const Vector& theta, const DataSet& data, int i) const {
  const Matrix c = obs_cov(theta, i + 1);
  Eigen::LLT<Matrix> llt(c);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("signal_plus_noise: covariance not PD");
  }
  const Matrix cinv = llt.solve(Matrix::Identity(q_, q_));
  const Vector e = data.row(i) - theta.head(q_);
  const Vector v = cinv * e;
  Vector g(param_dim());
  g.head(q_) = -v;
  for (int j = 0; j < q_; ++j) {
    g(q_ + j) = 0.5 * (cinv(j, j) - v(j) * v(j));
  }
  return g;
}

Matrix SignalPlusNoiseModel::obs_hessian(const Vector& theta, const DataSet& data, int i) const {
  const Matrix c = obs_cov(theta, i + 1);
  Eigen::LLT<Matrix> llt(c);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("signal_plus_noise: covariance not PD");
  }
  const Matrix cinv = llt.solve(Matrix::Identity(q_, q_));
  const Vector e = data.row(i) - theta.head(q_);
  const Vector v = cinv * e;
  Matrix h(param_dim(), param_dim());
  h.topLeftCorner(q_, q_) = cinv;
  for (int a = 0; a < q_; ++a) {
    for (int j = 0; j < q_; ++j) {
      h(a, q_ + j) = h(q_ + j, a) = cinv(a, j) * v(j);
    }
  }
  for (int j = 0; j < q_; ++j) {
    for (int k = 0; k < q_; ++k) {
      h(q_ + j, q_ + k) = -0.5 * cinv(j, k) * cinv(j, k) + v(j) * cinv(j, k) * v(k);
    }
  }
  return h;
}

SymMat SignalPlusNoiseModel::expected_fim(const Vector& theta, int n) const {
  Matrix fim = Matrix::Zero(param_dim(), param_dim());
  for (int i = 1; i <= n; ++i) {
    const Matrix c = obs_cov(theta, i);
    Eigen::LLT<Matrix> llt(c);
    if (llt.info() != Eigen::Success) {
      throw NotPositiveDefinite("signal_plus_noise: covariance not PD");
    }
    const Matrix cinv = llt.solve(Matrix::Identity(q_, q_));
    fim.topLeftCorner(q_, q_) += cinv;
    for (int j = 0; j < q_; ++j) {
      for (int k = 0; k < q_; ++k) {
        fim(q_ + j, q_ + k) += 0.5 * cinv(j, k) * cinv(j, k);
      }
    }
  }
  return SymMat(fim);
}

Vector SignalPlusNoiseModel::lower_bounds() const {
  Vector lo = Vector::Constant(param_dim(), -std::numeric_limits<double>::infinity());
  lo.tail(q_).setConstant(1e-8);
  return lo;
}

Vector SignalPlusNoiseModel::default_init(const DataSet& data) const {
  Vector init(param_dim());
  init.head(q_) = data.matrix().colwise().mean().transpose();
  double avg_noise_trace = 0.0;
  for (int i = 1; i <= data.n(); ++i) avg_noise_trace += std::sqrt(static_cast<double>(i));
  avg_noise_trace /= data.n();
  for (int j = 0; j < q_; ++j) {
    const double var = (data.matrix().col(j).array() - init(j)).square().sum() /
                       std::max(data.n() - 1, 1);
    init(q_ + j) = std::max(var - avg_noise_trace * utu_(j, j), 0.1);
  }
  return init;
}

}  // namespace fimlab
