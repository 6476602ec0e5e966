#pragma once

#include <stdexcept>
#include <string>

namespace fimlab {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotPositiveDefinite : Error { using Error::Error; };
struct NonFiniteEvaluation : Error { using Error::Error; };
struct DegenerateMixture : Error { using Error::Error; };
struct SingularInnovation : Error { using Error::Error; };
struct NotIndependentData : Error { using Error::Error; };
struct ZeroPerturbationComponent : Error { using Error::Error; };
struct InvalidDistribution : Error { using Error::Error; };
struct EmptyCandidates : Error { using Error::Error; };
struct ZeroReference : Error { using Error::Error; };
struct SingularHessian : Error { using Error::Error; };
struct TooManyFailures : Error { using Error::Error; };
struct UnknownExperiment : Error { using Error::Error; };
struct InvalidOverride : Error { using Error::Error; };
struct IoFailure : Error { using Error::Error; };

}  // namespace fimlab
