#pragma once

#include <functional>
#include <iostream>
#include <stdexcept>
#include <string>
#include <utility>

namespace ftf {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised for malformed inputs at construction time.
class ConstructionError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// Non-finite intermediate values inside an iterative method.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefinite : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// The order graph has a directed cycle where a partial order was required.
class CyclicGraphError : public Error {
 public:
  using Error::Error;
};

using WarningHandler = std::function<void(const std::string&)>;

namespace detail {

inline WarningHandler& warning_handler() {
  static WarningHandler handler = [](const std::string& msg) { std::cerr << "ftf warning: " << msg << '\n'; };
  return handler;
}

}  // namespace detail

// Replaces the process-wide sink for non-fatal diagnostics; returns the previous one.
inline WarningHandler set_warning_handler(WarningHandler h) {
  return std::exchange(detail::warning_handler(), std::move(h));
}

inline void warn(const std::string& msg) {
  if (detail::warning_handler()) detail::warning_handler()(msg);
}

namespace detail {

inline void require_dims(bool ok, const char* what) {
  if (!ok) throw DimensionError(what);
}

}  // namespace detail
}  // namespace ftf
