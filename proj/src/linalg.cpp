#include "fimlab/linalg.hpp"

#include <cmath>

namespace fimlab {

SymMat::SymMat(Matrix m) {
  if (m.rows() < 1 || m.rows() != m.cols()) {
    throw Error("SymMat: need a square matrix of dimension >= 1");
  }
  if (!all_finite(m)) {
    throw NonFiniteEvaluation("SymMat: non-finite entries");
  }
  const double scale = m.cwiseAbs().maxCoeff();
  const double skew = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (skew > 1e-12 * std::max(scale, 1.0)) {
    throw Error("SymMat: matrix is not symmetric");
  }
  m_ = 0.5 * (m + m.transpose());
}

SymMat sym_inverse(const SymMat& m) {
  Eigen::LLT<Matrix> llt(m.mat());
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("sym_inverse: Cholesky pivot failed");
  }
  Matrix inv = llt.solve(Matrix::Identity(m.dim(), m.dim()));
  if (!all_finite(inv)) {
    throw NotPositiveDefinite("sym_inverse: non-finite inverse");
  }
  return SymMat(0.5 * (inv + inv.transpose()));
}

double spectral_norm(const Matrix& m) {
  if (!all_finite(m)) {
    throw NonFiniteEvaluation("spectral_norm: non-finite entries");
  }
  return m.jacobiSvd().singularValues()(0);
}

double frobenius_distance(const Matrix& a, const Matrix& b) {
  return (a - b).norm();
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace fimlab
