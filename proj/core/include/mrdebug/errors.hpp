#pragma once

#include <stdexcept>
#include <string>

namespace mrdebug {

/// Misuse of the relation vocabulary: unknown labels, assignments outside an
/// exception set, schemas that break their own invariants.
class SpecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value that does not conform to its field's kind or range.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Out-of-domain statistical or learning parameters.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Generation could not satisfy a predicate within its attempt budget.
class Unsatisfiable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mrdebug
