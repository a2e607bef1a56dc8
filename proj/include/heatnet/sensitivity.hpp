#pragma once

#include <vector>

#include <Eigen/Dense>

#include "heatnet/dae.hpp"

namespace heatnet {

// max_h dp_h(t) - min_h dp_h(t) with the gradient of the active pair when
// the trajectory carries sensitivities.
struct SpreadSeries {
  Eigen::VectorXd value;     // per time, Pa
  Eigen::MatrixXd gradient;  // times x params (empty without sensitivities)
  std::vector<Index> high;   // consumer with the largest difference
  std::vector<Index> low;    // consumer with the smallest difference
};

SpreadSeries pressure_spread(const TrajectoryRecord& rec);

// Trajectory of one consumer output and its parameter gradient (times x params).
Eigen::MatrixXd output_gradient(const TrajectoryRecord& rec, Index consumer);

// Flattens per-time sensitivity blocks of one quantity into long format rows
// (time index, quantity row, parameter, value) for debugging dumps.
struct SensitivityEntry {
  Index time = 0;
  Index row = 0;
  Index parameter = 0;
  double value = 0.0;
};
std::vector<SensitivityEntry> flatten_sensitivities(const std::vector<Eigen::MatrixXd>& blocks);

}  // namespace heatnet
