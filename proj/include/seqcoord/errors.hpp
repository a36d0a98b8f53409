#pragma once

#include <stdexcept>
#include <string>

namespace seqcoord {

// Enumeration or allocation limit exceeded (exit code 3 in the CLI).
class GuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numerical routine failed to certify its answer (LP duality gap,
// singular Newton system, ...).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent experiment configuration (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File system failure while persisting results (exit code 4).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace seqcoord
