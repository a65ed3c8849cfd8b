#pragma once

#include <stdexcept>
#include <string>

namespace dynreg {

/// Input outside the mathematical domain of a function (schedule, time rescaling).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A grid function with no finite value, or an ambiguous sentinel.
struct PropernessError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A documented precondition failed (non-seminorm input, empty set, bad config).
struct PreconditionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct UnsupportedError : std::logic_error {
  using std::logic_error::logic_error;
};

struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AssemblyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace dynreg
