#pragma once

#include <optional>
#include <string>

#include "fimlab/model.hpp"
#include "fimlab/spsa.hpp"
#include "fimlab/stats.hpp"

namespace fimlab {

enum class McFimMode { gradient, likelihood_only };

struct McFimOptions {
  int datasets = 2000;   // N: pseudo datasets simulated at theta
  int inner_reps = 2;    // M: curvature estimates per dataset
  double c = 1e-4;
  McFimMode mode = McFimMode::gradient;
  PerturbationDist dist = PerturbationDist::bernoulli_pm1();
  bool per_observation = false;  // fresh perturbation per independent observation
};

using GradOracle = std::function<Vector(const Vector&)>;

// Symmetrized simultaneous perturbation estimate of the Hessian of the loss
// whose gradient is grad_fn.
Matrix sp_hessian_estimate(const GradOracle& grad_fn, const Vector& theta, double c,
                           const Vector& delta);

// Same estimate from loss values only: the two gradients are one-sided
// simultaneous perturbation differences sharing the inner perturbation.
// Uses four loss evaluations.
Matrix sp_hessian_estimate_ll(const NoisyLoss& loss, const Vector& theta, double c,
                              const Vector& delta, const Vector& delta_tilde);

// Linear error map: psi(H) = (H D + D' H)/2 with D = delta delta_inv' - I.
// A symmetrized SP estimate of H decomposes as H + psi(H) + O(c^2), and
// E psi(H) = 0 over the perturbation distribution.
Matrix psi(const Matrix& h, const Vector& delta);

struct FimEstimate {
  SymMat value;
  int datasets;
  int inner_reps;
  bool feedback = false;
  bool per_observation = false;
};

// Plain double average of the per-dataset estimates.
FimEstimate fim_basic(const Model& model, const Vector& theta, int n,
                      const McFimOptions& opts, RngStream rng);

// Running average that subtracts psi applied to the previous iterate, which
// removes the dominant zero-mean error term.
FimEstimate fim_feedback(const Model& model, const Vector& theta, int n,
                         const McFimOptions& opts, RngStream rng);

// Per-observation variant: each independent observation gets its own
// perturbation, optionally with the feedback correction applied per
// observation. Requires independent observations.
FimEstimate fim_indep(const Model& model, const Vector& theta, int n,
                      const McFimOptions& opts, bool feedback, RngStream rng);

// Both plain and feedback estimates from one shared draw sequence, for
// matched comparisons.
std::pair<FimEstimate, FimEstimate> fim_pair(const Model& model, const Vector& theta,
                                             int n, const McFimOptions& opts, RngStream rng);
std::pair<FimEstimate, FimEstimate> fim_indep_pair(const Model& model, const Vector& theta,
                                                   int n, const McFimOptions& opts,
                                                   RngStream rng);

// Spectral-norm relative deviation from a reference information matrix.
double relative_error(const Matrix& estimate, const Matrix& reference);

struct McFimBenchRow {
  std::string label;
  int runs = 0;
  int datasets = 0;
  double mean_rel_basic = 0.0, se_rel_basic = 0.0;
  double mean_rel_enhanced = 0.0, se_rel_enhanced = 0.0;
  PairedTTest ttest;  // basic minus enhanced
};

// Paired benchmark of the plain and enhanced estimators against a reference,
// over `runs` independent repetitions.
McFimBenchRow mcfim_benchmark_row(const Model& model, const Vector& theta, int n,
                                  const McFimOptions& opts, const SymMat& reference,
                                  int runs, bool per_observation, RngStream rng,
                                  int threads = 1, const std::string& label = "");

}  // namespace fimlab
