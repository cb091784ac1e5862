#pragma once

#include <stdexcept>
#include <string>

namespace pmac {

/// Raised when inputs violate a documented precondition (bad geometry,
/// non-physical channel constants, malformed configuration).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A link that cannot reach its SINR threshold even with zero interference.
class InfeasibleLinkError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Internal bookkeeping broke an invariant (for example a radio ledger whose
/// mode times do not add up to the simulated duration).
class IntegrityError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace pmac
