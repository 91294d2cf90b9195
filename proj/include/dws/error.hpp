#pragma once

#include <stdexcept>
#include <string>

namespace dws {

// Invalid argument or state outside an operation's domain.
struct DomainError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct PreconditionError : std::logic_error {
  using std::logic_error::logic_error;
};

// Malformed sequence or scenario content (not tied to a source line).
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Numerical failure: solver non-convergence, lost unitarity and so on.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GeometryError : NumericError {
  using NumericError::NumericError;
};

struct StabilityError : NumericError {
  using NumericError::NumericError;
};

}  // namespace dws
