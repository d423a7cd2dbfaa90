#pragma once

#include <stdexcept>
#include <string>

namespace tep {

// Error categories map 1:1 to CLI exit codes (see tools/tep_main.cpp).
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid configuration or parameters (bad band edges, bad window, ...).
struct ConfigError : Error {
  using Error::Error;
};

// File system / parsing failures.
struct IoError : Error {
  using Error::Error;
};

// Input data violates a contract (non-uniform sampling, single class, ...).
struct DataError : Error {
  using Error::Error;
};

// Data is valid but degenerate for the requested operation (flat trial, ...).
struct DegenerateError : Error {
  using Error::Error;
};

}  // namespace tep
