#pragma once

#include <stdexcept>
#include <string>

namespace lstn {

// Base class for everything thrown by the library.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape or axis disagreement between tensors.
struct DimensionError : Error {
  explicit DimensionError(const std::string& msg) : Error(msg) {}
};

// Invalid configuration value (bad channel list, negative lambda, ...).
struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// API misuse (backward on a non-scalar, finetune without frame pairs, ...).
struct UsageError : Error {
  explicit UsageError(const std::string& msg) : Error(msg) {}
};

// Malformed input file (bad magic, truncated payload, syntax error).
struct ParseError : Error {
  explicit ParseError(const std::string& msg) : Error(msg) {}
};

// Well-formed input carrying invalid data (out-of-bounds head, ...).
struct ValidationError : Error {
  explicit ValidationError(const std::string& msg) : Error(msg) {}
};

// Checkpoint directory problems; message names the offending parameter.
struct CheckpointError : Error {
  explicit CheckpointError(const std::string& msg) : Error(msg) {}
};

// Filesystem failures on otherwise valid requests.
struct IoError : Error {
  explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace lstn
