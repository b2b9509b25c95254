#pragma once

#include <stdexcept>
#include <string>

namespace pricelab {

// Input outside an operation's domain (negative price, non-finite argument, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A mathematical invariant the model relies on does not hold.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace pricelab
