#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "heatnet/network.hpp"
#include "heatnet/time_grid.hpp"
#include "heatnet/units.hpp"

namespace heatnet {

// Smooth periodic interpolant through equidistant knots (natural periodic
// cubic spline). The integral over one period equals spacing * sum(knots).
class PeriodicSpline {
 public:
  PeriodicSpline() = default;
  PeriodicSpline(std::vector<double> knots, double period);

  double operator()(double t) const;
  double period() const { return period_; }
  const std::vector<double>& knots() const { return knots_; }

 private:
  std::vector<double> knots_;
  std::vector<double> curvature_;
  double period_ = 0.0;
  double spacing_ = 0.0;
};

// Normalized daily demand shape of one consumer class at one daily mean
// temperature: 24 hourly factors (1/s) interpolated by a periodic spline.
// G_i(t) = c_i * s(t).
struct DemandProfile {
  int class_id = 0;
  double daily_mean_temperature = 0.0;  // degrees Celsius
  std::array<double, 24> hourly{};
  PeriodicSpline spline;

  static DemandProfile from_hourly(int class_id, double t_d, const std::array<double, 24>& factors);
  // Constant shape integrating to one over a day.
  static DemandProfile flat();

  double operator()(double t) const { return spline(t); }
  // Integral of the shape over one day (dimensionless daily factor).
  double daily_factor() const;
};

// Synthetic stand-in for standard load profiles: baseline plus morning (06:00)
// and evening (18:00) peaks, with heating demand and peak amplitude growing
// as the daily mean temperature falls. Pointwise monotone in the temperature.
// Class 0 is residential, class 1 a daytime commercial shape.
DemandProfile synthetic_profile(int class_id, double daily_mean_temperature);

// G_i on the grid points.
Eigen::VectorXd demand_signal(const DemandProfile& profile, double scale, const TimeGrid& grid);

// Demand of every consumer of a network for one daily mean temperature.
class DemandModel {
 public:
  DemandModel(const Network& net, double daily_mean_temperature);
  DemandModel(std::vector<DemandProfile> per_consumer, Eigen::VectorXd scales);

  Index num_consumers() const { return scales_.size(); }
  Eigen::VectorXd at(double t) const;
  // Rows are grid times, columns consumers.
  Eigen::MatrixXd on_grid(const TimeGrid& grid) const;
  Eigen::VectorXd total_on_grid(const TimeGrid& grid) const;

 private:
  std::vector<DemandProfile> profiles_;
  Eigen::VectorXd scales_;
};

struct DemandStats {
  double mean = 0.0;      // G_0
  double maximum = 0.0;   // G-bar
  double feed_in_cap = 0.0;
};

// Daily mean and maximum of the aggregated demand over the second period
// (post-transient), and the cap G_0 + ratio (G-bar - G_0).
DemandStats aggregate_stats(const Eigen::VectorXd& total_demand, const TimeGrid& grid,
                            double cap_ratio = 0.5, double period = kSecondsPerDay);

// Human-facing scenario settings; temperatures in Celsius, pressures in bar.
struct ScenarioConfig {
  double daily_mean_temperature_c = -3.0;
  double min_consumer_temperature_c = 75.0;
  double max_network_temperature_c = 110.0;
  double return_temperature_c = 45.0;
  double initial_temperature_c = 90.0;
  double p_min_bar = 3.5;
  double p_max_bar = 9.1;
  double spread_limit_bar = 2.5;
  double feed_in_ratio = 0.5;
  double relaxation_period_s = kSecondsPerDay;
  double t0_s = 0.0;
  double te_s = 3.0 * kSecondsPerDay;
  double dt_s = 300.0;
  double eta1_s2 = 1.8914e8;  // (period / 2 pi)^2 balances both objective terms
  double eta2_c = 80.0;
  int harmonics = 12;
  double reference_reynolds = 1.0e5;
  double energy_floor_k = 1.0;

  TimeGrid grid() const { return {t0_s, te_s, dt_s}; }
  double return_energy(const PhysicalConstants& c = {}) const {
    return energy_from_celsius(return_temperature_c, c);
  }

  static ScenarioConfig from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

ScenarioConfig load_scenario(const std::filesystem::path& path);

}  // namespace heatnet
