#pragma once

#include <stdexcept>
#include <string>

namespace dermabench {

/// Base class for every exception thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration value or unsupported option.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A required file, archive or resource could not be opened.
class LoadError : public Error {
 public:
  using Error::Error;
};

/// Archive contents disagree with the expected dataset layout (counts, shapes).
class IntegrityError : public Error {
 public:
  using Error::Error;
};

/// Contents are structurally readable but carry impossible values.
class CorruptionError : public Error {
 public:
  using Error::Error;
};

/// An operation was invoked with arguments violating its contract.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Model construction failed.
class BuildError : public Error {
 public:
  using Error::Error;
};

/// Training aborted (non-finite loss, empty split, ...).
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Filesystem or network I/O failure.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace dermabench
