#pragma once

namespace heatnet {

struct PhysicalConstants {
  double density = 1000.0;        // kg/m^3
  double heat_capacity = 4160.0;  // J/(kg K)
  double gravity = 9.81;          // m/s^2
};

inline constexpr double kCelsiusOffset = 273.15;
inline constexpr double kPascalPerBar = 1.0e5;
inline constexpr double kSecondsPerDay = 86400.0;

// Energy density of water at temperature T (degrees Celsius), e = rho c_p T_abs.
inline double energy_from_celsius(double t_celsius, const PhysicalConstants& c = {}) {
  return c.density * c.heat_capacity * (t_celsius + kCelsiusOffset);
}

inline double celsius_from_energy(double e, const PhysicalConstants& c = {}) {
  return e / (c.density * c.heat_capacity) - kCelsiusOffset;
}

// Energy density corresponding to a temperature difference of delta_k kelvin.
inline double energy_per_kelvin(const PhysicalConstants& c = {}) {
  return c.density * c.heat_capacity;
}

inline double bar_to_pa(double bar) { return bar * kPascalPerBar; }
inline double pa_to_bar(double pa) { return pa / kPascalPerBar; }

}  // namespace heatnet
