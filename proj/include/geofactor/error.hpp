#pragma once

#include <stdexcept>
#include <string>

namespace geofactor {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Two objects that must live on the same finite measure space do not.
class SpaceMismatch : public Error
{
public:
  using Error::Error;
};

/// A precondition on an argument (exponent range, positivity, shape) failed.
class InvalidArgument : public Error
{
public:
  using Error::Error;
};

/// Some operator has an all-zero kernel row at a point that must be reached.
class SaturationFailure : public Error
{
public:
  using Error::Error;
};

/// An enumeration would exceed its configured size budget.
class BudgetExceeded : public Error
{
public:
  using Error::Error;
};

/// A numerical routine hit a degenerate value it cannot recover from.
class NumericalFailure : public Error
{
public:
  using Error::Error;
};

} // namespace geofactor
