#pragma once

#include <stdexcept>

namespace stprep {

// Invalid parameter value or violated call precondition.
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Malformed file contents (WAV chunks, trace files, record lines, dumps).
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Filesystem-level failure: missing file, unreadable or unwritable path.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Rejected pipeline configuration. Reported with exit code 2 by the CLI.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace stprep
