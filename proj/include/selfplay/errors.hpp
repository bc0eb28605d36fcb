#pragma once

#include <stdexcept>
#include <string>

namespace selfplay {

// Broken precondition: shape mismatch, step after terminal, bad argument.
struct ContractViolation : std::logic_error {
  using std::logic_error::logic_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StorageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Stored bytes do not match their recorded checksum or layout.
struct IntegrityError : StorageError {
  using StorageError::StorageError;
};

// A run directory referenced by an evaluation command is missing or unreadable.
struct RunDirError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ContractViolation(what);
}

}  // namespace selfplay
