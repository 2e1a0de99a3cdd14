#pragma once

#include <stdexcept>
#include <string>

namespace selfsim {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An operation produced a term outside a declared degree truncation.
/// Distinct from a zero result: the true answer is not representable.
class TruncationExceeded : public Error {
 public:
  using Error::Error;
};

/// A level space X^{(x)m} would exceed the configured dimension cap.
class DimensionExceeded : public Error {
 public:
  using Error::Error;
};

/// Constructor parameters violate a hypothesis (e.g. p | n+1).
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// Operands that do not belong together (different fields, algebras, sizes).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A construction was refused because its preconditions failed.
class ConditionsFailed : public Error {
 public:
  using Error::Error;
};

}  // namespace selfsim
