#pragma once

#include <stdexcept>

namespace climssm {

// Input data is unusable: unreadable file, malformed rows, too little data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numerical procedure broke down (non-positive innovation variance,
// divergence, singular system).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace climssm
