#pragma once

#include <stdexcept>
#include <string>

namespace muonpp {

/// Malformed arguments: shape mismatches, non-finite entries, out-of-range scalars.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Well-formed input for which the requested quantity is undefined (e.g. a zero matrix).
class DegenerateInput : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace muonpp
