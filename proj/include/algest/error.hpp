#pragma once

#include <stdexcept>
#include <string>

namespace algest {

/// Malformed arguments: zero denominators, mismatched grids, bad windows.
class invalid_input : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Evaluation hit a pole of a rational function. Callers that evaluate at
/// random points catch this and draw a new point.
class pole_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Unusable configuration document (missing keys, unknown kinds).
class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// No selection of derivative rows gave a nonsingular parameter matrix.
class not_identifiable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure that is not the caller's fault (retry budgets, all
/// windows ill-conditioned).
class numerical_failure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace algest
