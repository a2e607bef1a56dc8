#pragma once

#include <cmath>
#include <cstddef>

#include "heatnet/errors.hpp"

namespace heatnet {

// Discrete observation times {t0, t0 + dt, ..., te}.
struct TimeGrid {
  double t0 = 0.0;
  double te = 0.0;
  double dt = 1.0;

  TimeGrid() = default;
  TimeGrid(double start, double end, double step) : t0(start), te(end), dt(step) {
    if (!(dt > 0.0)) throw InputError("time grid step must be positive");
    if (te < t0) throw InputError("time grid end precedes its start");
    const double steps = (te - t0) / dt;
    if (std::abs(steps - std::round(steps)) > 1.0e-9 * std::max(1.0, steps)) {
      throw InputError("time grid span is not an integral multiple of the step");
    }
  }

  std::ptrdiff_t num_steps() const { return static_cast<std::ptrdiff_t>(std::llround((te - t0) / dt)); }
  std::ptrdiff_t size() const { return num_steps() + 1; }
  double time(std::ptrdiff_t i) const { return t0 + static_cast<double>(i) * dt; }
};

}  // namespace heatnet
