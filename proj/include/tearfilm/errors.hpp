#pragma once

#include <stdexcept>

namespace tearfilm {

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised by residual evaluations when a trial state leaves the physical
/// region (for example a Newton iterate with non-positive thickness).
/// Integrators treat it as a failed iteration and retry with a smaller step.
class InvalidStateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tearfilm
