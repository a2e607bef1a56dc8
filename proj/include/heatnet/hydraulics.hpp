#pragma once

#include <vector>

#include <Eigen/Dense>

#include "heatnet/errors.hpp"
#include "heatnet/network.hpp"
#include "heatnet/units.hpp"

namespace heatnet {

struct FrictionConfig {
  double reference_reynolds = 1.0e5;
  // Only used to report the reference velocity implied by the Reynolds choice.
  double kinematic_viscosity = 3.3e-7;
};

// Darcy friction factor solving the Colebrook-White equation
//   1/sqrt(lambda) = -2 log10(k/(3.7 d) + 2.51/(Re sqrt(lambda)))
// Requires a turbulent Reynolds number (> 4000).
double colebrook_lambda(double relative_roughness, double reynolds);

// Freezes one friction factor per pipe, evaluated at the reference Reynolds number.
void initialize_friction(Network& net, const FrictionConfig& config = {});

struct FlowField {
  Eigen::VectorXd q;        // volume flow per pipe, m^3/s, signed w.r.t. reference direction
  Eigen::VectorXd v;        // velocity per pipe, m/s
  Eigen::VectorXd q_tilde;  // independent flows: consumer flows, then one chord flow per loop
  double q_source = 0.0;    // volume flow injected at the source node
  int iterations = 0;       // Newton iterations spent in the loop solve
};

// Thrown when a consumer sees an energy difference below the configured floor.
class ConsumerEnergyError : public NumericalError {
 public:
  ConsumerEnergyError(Index consumer, double difference, const std::string& what)
      : NumericalError(what), consumer_(consumer), difference_(difference) {}
  Index consumer() const { return consumer_; }
  double difference() const { return difference_; }

 private:
  Index consumer_;
  double difference_;
};

// Flow-defining algebraic part of the network: volume conservation through a
// constant null-space map, loop pressure balance by Newton iteration on the
// chord flows, and consumer pressure differences along tree paths.
class HydraulicModel {
 public:
  explicit HydraulicModel(const Network& net, PhysicalConstants constants = {},
                          double regularization = 1.0e-9);

  const Network& network() const { return net_; }
  const PhysicalConstants& constants() const { return constants_; }
  Index num_independent() const { return net_.num_consumers() + num_loops(); }
  Index num_loops() const { return static_cast<Index>(loops_.size()); }

  // v = N q_tilde.
  const Eigen::MatrixXd& nullspace() const { return velocity_map_; }
  // q = N_q q_tilde.
  const Eigen::MatrixXd& flow_map() const { return flow_map_; }
  // Signed pipe-by-loop incidence.
  const Eigen::MatrixXd& loop_incidence() const { return loop_incidence_; }
  const std::vector<EdgePath>& loops() const { return loops_; }
  const std::vector<EdgePath>& consumer_paths() const { return paths_; }

  FlowField flow_from_independent(const Eigen::VectorXd& q_tilde) const;

  // Solves the loop condition for the chord flows given consumer flows.
  // `chord_guess` warm-starts Newton; the default start is zero chord flow.
  FlowField solve_loop_flows(const Eigen::VectorXd& q_consumers,
                             const Eigen::VectorXd* chord_guess = nullptr,
                             double tolerance = 1.0e-12, int max_iterations = 100) const;

  Eigen::VectorXd loop_residuals(const FlowField& flow) const;
  // Largest sum of |friction terms| over any loop; scale for loop residuals.
  double loop_scale(const FlowField& flow) const;

  // d q / d q_consumers at a solved flow field (chords respond implicitly).
  Eigen::MatrixXd flow_derivative(const FlowField& flow) const;

  // Regularized Darcy-Weisbach term r * sqrt(v^2 + eps^2) * v for pipe p.
  double friction_term(Index p, double v) const;
  double friction_term_derivative(Index p, double v) const;

  // Pressure difference from source to each consumer along its tree path.
  Eigen::VectorXd pressure_differences(const FlowField& flow) const;
  // Same quantity along an arbitrary source-to-consumer path.
  double pressure_difference_along(const FlowField& flow, Index consumer,
                                   const EdgePath& path) const;
  // d(pressure difference) / d q, consumers x pipes.
  Eigen::MatrixXd pressure_derivative(const FlowField& flow) const;

 private:
  Eigen::VectorXd loop_residuals_at(const Eigen::VectorXd& v) const;
  Eigen::MatrixXd loop_jacobian_at(const Eigen::VectorXd& v) const;

  Network net_;
  PhysicalConstants constants_;
  double eps_;
  std::vector<EdgePath> loops_;
  std::vector<EdgePath> paths_;
  Eigen::VectorXd area_;
  Eigen::VectorXd resistance_;
  Eigen::MatrixXd consumer_map_;  // pipes x consumers
  Eigen::MatrixXd loop_incidence_;
  Eigen::MatrixXd flow_map_;
  Eigen::MatrixXd velocity_map_;
};

// q_i = G_i / (e_i - e_R). Throws ConsumerEnergyError when e_i - e_R <= floor.
Eigen::VectorXd consumer_flows(const Eigen::VectorXd& demand, const Eigen::VectorXd& consumer_energy,
                               double return_energy, double floor);

struct PressureControl {
  Eigen::VectorXd source_pressure;  // u_p per time, Pa
  Eigen::MatrixXd pressures;        // times x consumers, Pa
};

// Shifts the source pressure so the lowest consumer pressure equals p_min at
// every time. `differences` holds consumer pressure differences (times x consumers).
PressureControl posteriori_pressure_control(const Eigen::MatrixXd& differences, double p_min);

struct PumpingPower {
  Eigen::VectorXd power;  // per time, W
  double bound = 0.0;     // max dp * max sum G / min energy difference
};

PumpingPower pumping_power(const Eigen::VectorXd& source_dp, const Eigen::MatrixXd& demand,
                           const Eigen::MatrixXd& consumer_energy, double return_energy);

double pumping_power(double source_dp, const Eigen::VectorXd& demand,
                     const Eigen::VectorXd& consumer_energy, double return_energy);

}  // namespace heatnet
