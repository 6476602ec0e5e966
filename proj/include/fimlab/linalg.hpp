#pragma once

#include <Eigen/Dense>

#include "fimlab/errors.hpp"

namespace fimlab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Symmetric matrix value type. Construction checks the input is symmetric to
// 1e-12 relative tolerance and stores the exactly symmetric (m + m^T)/2.
class SymMat {
 public:
  SymMat() : m_(Matrix::Zero(1, 1)) {}
  explicit SymMat(Matrix m);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& mat() const { return m_; }
  double operator()(int r, int c) const { return m_(r, c); }

 private:
  Matrix m_;
};

// Inverse of a symmetric positive definite matrix via Cholesky.
// Throws NotPositiveDefinite when a pivot fails.
SymMat sym_inverse(const SymMat& m);

// Largest singular value.
double spectral_norm(const Matrix& m);

double frobenius_distance(const Matrix& a, const Matrix& b);

bool all_finite(const Matrix& m);

}  // namespace fimlab
