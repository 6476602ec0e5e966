#pragma once

#include <functional>

#include "fimlab/linalg.hpp"

namespace fimlab {

using ScalarFn = std::function<double(const Vector&)>;

// Per-coordinate default step: cbrt(eps) * max(1, |theta_j|).
Vector fd_default_steps(const Vector& theta);

// Central differences. Throws NonFiniteEvaluation if any probe is non-finite.
Vector fd_gradient(const ScalarFn& f, const Vector& theta, double h = 0.0);
Matrix fd_hessian(const ScalarFn& f, const Vector& theta, double h = 0.0);

}  // namespace fimlab
