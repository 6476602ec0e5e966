#pragma once

#include <vector>

#include "fimlab/model.hpp"

namespace fimlab {

// One pass of the Kalman filter: innovations, their variances, and the
// filtered state moments at every step.
struct KalmanRun {
  Vector innovations;                 // eps_t
  Vector innovation_vars;             // S_t = C P_{t|t-1} C' + R
  Matrix filtered_means;              // rows are xhat_{t|t}
  std::vector<Matrix> filtered_covs;  // P_{t|t}
};

// Scalar-output linear state space
//   x_t = A x_{t-1} + w_t,   w_t ~ N(0, Q)
//   y_t = C x_t + v_t,       v_t ~ N(0, R)
// with Q diagonal and theta = diag(Q). The likelihood comes from the
// innovations form; derivatives are finite differences over it.
class StateSpaceModel : public Model {
 public:
  StateSpaceModel(Matrix a, Matrix c, double r, Vector mu0, Matrix sigma0);

  // A, C, R, mu0, Sigma0 from the reference study.
  static StateSpaceModel paper_model();

  std::string name() const override { return "state_space"; }
  int param_dim() const override { return l_; }
  int obs_dim() const override { return 1; }

  DataSet sample(const Vector& theta, int n, RngStream& rng) const override;
  double neg_log_lik(const Vector& theta, const DataSet& data) const override;
  Vector grad(const Vector& theta, const DataSet& data) const override;
  SymMat hessian(const Vector& theta, const DataSet& data) const override;
  bool independent_observations() const override { return false; }

  Vector lower_bounds() const override;
  Vector default_init(const DataSet& data) const override;
  SolverKind default_solver() const override { return SolverKind::stochastic_search; }
  Vector search_box_lo() const;
  Vector search_box_hi() const;

  KalmanRun kalman_filter(const Vector& theta, const DataSet& data) const;

 private:
  int l_;
  Matrix a_;
  Matrix c_;  // 1 x l
  double r_;
  Vector mu0_;
  Matrix sigma0_;
};

}  // namespace fimlab
