#pragma once

#include <stdexcept>
#include <string>

namespace propdetect {

/// Bad input: malformed rows, out-of-range values, schema mismatches.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Filesystem failures. The message names the offending path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An operation was called on an object that has not been prepared yet.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Failure reported by, or while talking to, an external model provider.
class ProviderError : public std::runtime_error {
 public:
  explicit ProviderError(const std::string& what, bool retryable = false)
      : std::runtime_error(what), retryable_(retryable) {}

  bool retryable() const noexcept { return retryable_; }

 private:
  bool retryable_;
};

/// The provider did not answer in time. Callers may retry.
class ProviderTimeout : public ProviderError {
 public:
  explicit ProviderTimeout(const std::string& what) : ProviderError(what, true) {}
};

/// The provider answered with something that violates the wire schema.
class ProtocolError : public ProviderError {
 public:
  explicit ProtocolError(const std::string& what) : ProviderError(what, false) {}
};

}  // namespace propdetect
