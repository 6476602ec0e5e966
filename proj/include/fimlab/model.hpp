#pragma once

#include <memory>
#include <string>

#include "fimlab/dataset.hpp"
#include "fimlab/linalg.hpp"
#include "fimlab/rng.hpp"

namespace fimlab {

enum class SolverKind { newton, stochastic_search };

// A parametric model for n observations. Derivatives are of the negative
// log-likelihood, so the observed information is hessian() itself and the
// expected information is its expectation under theta.
class Model {
 public:
  virtual ~Model() = default;

  virtual std::string name() const = 0;
  virtual int param_dim() const = 0;
  virtual int obs_dim() const = 0;

  virtual DataSet sample(const Vector& theta, int n, RngStream& rng) const = 0;
  virtual double neg_log_lik(const Vector& theta, const DataSet& data) const = 0;
  virtual Vector grad(const Vector& theta, const DataSet& data) const;
  virtual SymMat hessian(const Vector& theta, const DataSet& data) const;

  // Per-observation pieces; only meaningful when observations are independent.
  virtual bool independent_observations() const { return true; }
  virtual double obs_neg_log_lik(const Vector& theta, const DataSet& data, int i) const;
  virtual Vector obs_grad(const Vector& theta, const DataSet& data, int i) const;
  virtual Matrix obs_hessian(const Vector& theta, const DataSet& data, int i) const;

  virtual bool has_analytic_fim() const { return false; }
  virtual SymMat expected_fim(const Vector& theta, int n) const;

  // Solver plumbing: box constraints, data-driven start, canonical labeling.
  virtual Vector lower_bounds() const;
  virtual Vector upper_bounds() const;
  virtual Vector default_init(const DataSet& data) const;
  virtual Vector canonicalize(Vector theta) const { return theta; }
  virtual SolverKind default_solver() const { return SolverKind::newton; }
};

}  // namespace fimlab
