#pragma once

#include "fimlab/model.hpp"

namespace fimlab {

struct NewtonOptions {
  int max_iters = 200;
  double grad_tol = 1e-8;
  // Accepted when the line search stalls: near the optimum the nll changes by
  // less than one ulp while the gradient is still above grad_tol.
  double stall_tol = 1e-5;
  double damping = 0.5;   // backtracking shrink factor
  Vector init;            // empty -> model default
};

struct SearchOptions {
  Vector box_lo, box_hi;  // empty -> model search box
  int budget = 4000;      // likelihood evaluations
  double init_scale = 0.25;   // step sd relative to box width
  double final_scale = 1e-3;  // geometric annealing target
  Vector init;            // empty -> box center
};

struct MleResult {
  Vector theta;
  double nll = 0.0;
  bool converged = false;
  int iterations = 0;
  double grad_norm = 0.0;  // sup norm at the returned point
};

// Damped Newton with box projection. Non-descent or failed factorizations
// fall back to a damped gradient step.
MleResult newton_mle(const Model& model, const DataSet& data, const NewtonOptions& opts = {});

// Annealed localized random search; only needs likelihood evaluations.
// Never returns a point worse than its start.
MleResult stochastic_search_mle(const Model& model, const DataSet& data,
                                const SearchOptions& opts, RngStream& rng);

// Dispatch on the model's preferred solver.
MleResult fit_mle(const Model& model, const DataSet& data, RngStream& rng);

}  // namespace fimlab
