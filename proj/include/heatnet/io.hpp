#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "heatnet/control.hpp"
#include "heatnet/dae.hpp"
#include "heatnet/network.hpp"

namespace heatnet {

// Numbers are written with the shortest round-trip representation, '.' as
// decimal separator and no locale influence.
std::string format_number(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  Index column(const std::string& name) const;  // throws InputError if absent
  Eigen::VectorXd values(const std::string& name) const;
};

void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);

// t_s, u_T_J_m3, u_T_C, feed_in_W, demand_W, total_flow_m3_s, then per consumer
// y_<id>_C, dp_<id>_bar and q_<id>_m3_s.
CsvTable trajectory_table(const TrajectoryRecord& rec, const Network& net, const PhysicalConstants& c = {});

// t_s, u_T (J/m^3), u_p (Pa).
CsvTable control_table(const std::vector<double>& times, const Eigen::VectorXd& u_t,
                       const Eigen::VectorXd& u_p);

struct ControlSeries {
  std::vector<double> times;
  Eigen::VectorXd u_t;
  Eigen::VectorXd u_p;
};
ControlSeries read_control(const std::filesystem::path& path);

nlohmann::json report_to_json(const OptimizationReport& report, const FourierControl& control,
                              const ConstraintSet& set);

// Errors of a control judged on a reference model: relative l2 distance to a
// reference control (NaN without one), largest relative feed-in overshoot
// after the relaxation period and largest relative l2 output error over
// consumers (temperatures in Celsius).
struct ValidationTable {
  double control_error = 0.0;
  double feed_in_overshoot = 0.0;
  double output_error = 0.0;
};

ValidationTable validation_errors(const TrajectoryRecord& reference, const TrajectoryRecord& coarse,
                                  const ConstraintSet& set, const Eigen::VectorXd* reference_control,
                                  const PhysicalConstants& c = {});
nlohmann::json validation_to_json(const ValidationTable& t);

// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

struct RunManifest {
  std::string command;
  std::vector<std::filesystem::path> inputs;
  std::vector<std::filesystem::path> outputs;
  nlohmann::json config;
  nlohmann::json timing;

  nlohmann::json to_json() const;
};

void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

const char* tool_version();

}  // namespace heatnet
