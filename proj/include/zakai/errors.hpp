#pragma once

#include <stdexcept>
#include <string>

namespace zakai {

struct SingularObservationNoise : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EvaluationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct QuadratureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BlowupError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct AssemblyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LinearSolveError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MassCollapseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GridMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RiccatiBlowup : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DegeneracyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InsufficientResolution : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace zakai
