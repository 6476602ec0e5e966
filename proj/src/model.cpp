#include "fimlab/model.hpp"

#include <limits>

#include "fimlab/errors.hpp"

namespace fimlab {

Vector Model::grad(const Vector& theta, const DataSet& data) const {
  Vector g = Vector::Zero(param_dim());
  for (int i = 0; i < data.n(); ++i) g += obs_grad(theta, data, i);
  return g;
}

SymMat Model::hessian(const Vector& theta, const DataSet& data) const {
  Matrix h = Matrix::Zero(param_dim(), param_dim());
  for (int i = 0; i < data.n(); ++i) h += obs_hessian(theta, data, i);
  return SymMat(h);
}

double Model::obs_neg_log_lik(const Vector&, const DataSet&, int) const {
  throw NotIndependentData(name() + ": no per-observation likelihood");
}

Vector Model::obs_grad(const Vector&, const DataSet&, int) const {
  throw NotIndependentData(name() + ": no per-observation gradient");
}

Matrix Model::obs_hessian(const Vector&, const DataSet&, int) const {
  throw NotIndependentData(name() + ": no per-observation hessian");
}

SymMat Model::expected_fim(const Vector&, int) const {
  throw Error(name() + ": no analytic expected information");
}

Vector Model::lower_bounds() const {
  return Vector::Constant(param_dim(), -std::numeric_limits<double>::infinity());
}

Vector Model::upper_bounds() const {
  return Vector::Constant(param_dim(), std::numeric_limits<double>::infinity());
}

Vector Model::default_init(const DataSet&) const {
  return Vector::Zero(param_dim());
}

}  // namespace fimlab
