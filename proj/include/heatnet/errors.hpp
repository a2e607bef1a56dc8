#pragma once

#include <stdexcept>
#include <string>

namespace heatnet {

// Malformed or inconsistent input data (files, configuration, arguments).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numerical procedure failed to converge or hit a singular system.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The optimization problem admits no point satisfying its constraints.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace heatnet
