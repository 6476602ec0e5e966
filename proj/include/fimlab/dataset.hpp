#pragma once

#include "fimlab/linalg.hpp"

namespace fimlab {

// n observations of a q-dimensional quantity, one per row. For time series
// the row order is the time order.
class DataSet {
 public:
  explicit DataSet(Matrix obs);

  int n() const { return static_cast<int>(obs_.rows()); }
  int q() const { return static_cast<int>(obs_.cols()); }
  Vector row(int i) const { return obs_.row(i).transpose(); }
  double scalar(int i) const { return obs_(i, 0); }
  const Matrix& matrix() const { return obs_; }

 private:
  Matrix obs_;
};

}  // namespace fimlab
