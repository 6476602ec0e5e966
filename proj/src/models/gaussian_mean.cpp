#include "fimlab/models/gaussian_mean.hpp"

#include <cmath>
#include <numbers>

#include "fimlab/errors.hpp"

namespace fimlab {

GaussianMeanModel::GaussianMeanModel(SymMat cov) : q_(cov.dim()), cov_(cov.mat()) {
  Eigen::LLT<Matrix> llt(cov_);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("GaussianMeanModel: covariance not PD");
  }
  prec_ = llt.solve(Matrix::Identity(q_, q_));
  chol_ = llt.matrixL();
  log_det_ = 0.0;
  for (int j = 0; j < q_; ++j) log_det_ += 2.0 * std::log(chol_(j, j));
}

DataSet GaussianMeanModel::sample(const Vector& theta, int n, RngStream& rng) const {
  if (theta.size() != q_) throw Error("GaussianMeanModel: bad parameter size");
  Matrix obs(n, q_);
  Vector z(q_);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < q_; ++j) z(j) = rng.normal();
    obs.row(i) = (theta + chol_ * z).transpose();
  }
  return DataSet(std::move(obs));
}

double GaussianMeanModel::obs_neg_log_lik(const Vector& theta, const DataSet& data, int i) const {
  const Vector e = data.row(i) - theta;
  return 0.5 * (q_ * std::log(2.0 * std::numbers::pi) + log_det_ + e.dot(prec_ * e));
}

double GaussianMeanModel::neg_log_lik(const Vector& theta, const DataSet& data) const {
  double nll = 0.0;
  for (int i = 0; i < data.n(); ++i) nll += obs_neg_log_lik(theta, data, i);
  return nll;
}

Vector GaussianMeanModel::obs_grad(const Vector& theta, const DataSet& data, int i) const {
  return prec_ * (theta - data.row(i));
}

Matrix GaussianMeanModel::obs_hessian(const Vector&, const DataSet&, int) const {
  return prec_;
}

SymMat GaussianMeanModel::expected_fim(const Vector&, int n) const {
  return SymMat(n * prec_);
}

Vector GaussianMeanModel::default_init(const DataSet& data) const {
  return data.matrix().colwise().mean().transpose();
}

}  // namespace fimlab
