#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "heatnet/dae.hpp"
#include "heatnet/hydraulics.hpp"
#include "heatnet/scenario.hpp"

namespace heatnet {

// u(t) = c0 + sum_k c_k cos(k w t) + s_k sin(k w t), w = 2 pi / period.
// Parameter layout: [c0, c_1..c_K, s_1..s_K].
struct FourierControl {
  int harmonics = 12;
  double period = kSecondsPerDay;

  Index num_parameters() const { return 2 * harmonics + 1; }
  double omega() const;
  Eigen::RowVectorXd basis(double t) const;
  Eigen::RowVectorXd basis_derivative(double t) const;
  double value(const Eigen::VectorXd& kappa, double t) const { return basis(t).dot(kappa); }
  double derivative(const Eigen::VectorXd& kappa, double t) const { return basis_derivative(t).dot(kappa); }
  ControlSignal signal(const Eigen::VectorXd& kappa) const;
  // Parameters of the constant control u.
  Eigen::VectorXd constant(double u) const;
  // Least-squares fit of samples u(t_i) (used to turn a control CSV into parameters).
  Eigen::VectorXd fit(const std::vector<double>& times, const Eigen::VectorXd& values) const;
};

struct ObjectiveConfig {
  double eta1 = 0.0;  // s^2
  double eta2 = 0.0;  // J/m^3
};

struct ObjectiveValue {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;  // constant: the objective is quadratic in kappa
};

// J = eta1 sum_t u'(t)^2 + sum_t (u(t) - eta2)^2 over the grid points.
ObjectiveValue evaluate_objective(const FourierControl& control, const Eigen::VectorXd& kappa,
                                  const TimeGrid& grid, const ObjectiveConfig& config);

// Bounds of the control problem in SI units. Infinite values disable a family.
struct ConstraintSet {
  double u_max = std::numeric_limits<double>::infinity();           // J/m^3
  double e_min = -std::numeric_limits<double>::infinity();          // J/m^3
  double p_min = 0.0;                                               // Pa
  double p_max = std::numeric_limits<double>::infinity();           // Pa
  double spread_limit = std::numeric_limits<double>::infinity();    // Pa
  double feed_in_cap = std::numeric_limits<double>::infinity();     // W
  double relaxed_cap = std::numeric_limits<double>::infinity();     // W, before relaxation_end
  double relaxation_end = -std::numeric_limits<double>::infinity(); // s
  double return_energy = 0.0;                                       // J/m^3

  // Checks the invariants; throws InputError.
  void validate() const;
  double cap_at(double t) const { return t < relaxation_end ? relaxed_cap : feed_in_cap; }

  static ConstraintSet from_scenario(const ScenarioConfig& cfg, const DemandStats& stats,
                                     const PhysicalConstants& c = {});
};

enum class ConstraintKind { control, consumer_energy, pressure_spread, feed_in };
const char* constraint_name(ConstraintKind k);

struct ConstraintRow {
  ConstraintKind kind;
  Index time = 0;
  Index consumer = -1;
};

// Stacked inequalities g(kappa) <= 0 in scaled units: kelvin for control and
// consumer rows, bar for the spread and multiples of the feed-in cap.
struct ConstraintValues {
  Eigen::VectorXd g;
  Eigen::MatrixXd jacobian;  // rows x parameters (kappa), empty without sensitivities
  std::vector<ConstraintRow> rows;

  double max_violation() const { return g.size() ? std::max(g.maxCoeff(), 0.0) : 0.0; }
};

ConstraintValues evaluate_constraints(const TrajectoryRecord& rec, const ConstraintSet& set,
                                      const PhysicalConstants& c = {});

// Smallest slack of each constraint family on a trajectory, in scaled units
// (positive = satisfied). Families without rows report +inf.
struct ConstraintMargins {
  double control_k = std::numeric_limits<double>::infinity();
  double consumer_k = std::numeric_limits<double>::infinity();
  double spread_bar = std::numeric_limits<double>::infinity();
  double feed_in_relative = std::numeric_limits<double>::infinity();
};
ConstraintMargins constraint_margins(const ConstraintValues& values);

// Simulates the control with parameters kappa; counts as one DAE solve.
using ControlOracle = std::function<TrajectoryRecord(const Eigen::VectorXd& kappa, bool sensitivities)>;

// Oracle over a FOM or ROM: starts from the stationary state at u(t0), whose
// sensitivity is the uniform state times the control basis at t0.
template <class Model>
ControlOracle make_oracle(std::shared_ptr<const Model> model, std::shared_ptr<const FlowCoupling> coupling,
                          TimeGrid grid, FourierControl control, LoadFunction load,
                          SimulationOptions base = {}) {
  return [=](const Eigen::VectorXd& kappa, bool sensitivities) {
    SimulationOptions opts = base;
    opts.sensitivities = sensitivities;
    ControlSignal signal = control.signal(kappa);
    const double u0 = signal.value(grid.t0);
    const Eigen::VectorXd x0 = stationary_init(*model, u0);
    Eigen::MatrixXd s0;
    if (sensitivities) s0 = model->initial_state(1.0) * control.basis(grid.t0);
    return simulate(*model, *coupling, grid, signal, load, x0, opts, sensitivities ? &s0 : nullptr);
  };
}

struct OptimizationProblem {
  FourierControl control;
  ObjectiveConfig objective;
  ConstraintSet constraints;
  TimeGrid grid;
  ControlOracle oracle;
  PhysicalConstants constants;
};

struct SqpOptions {
  int max_iterations = 100;
  int max_phase1_iterations = 60;
  double step_tolerance = 1.0e-6;         // on the scaled step, kelvin
  double feasibility_tolerance = 1.0e-6;  // on scaled violations
  double initial_trust_radius = 50.0;     // kelvin per parameter
  int max_line_search = 8;
};

struct IterationLog {
  int iteration = 0;
  double objective = 0.0;      // scaled objective
  double max_violation = 0.0;  // scaled
  double step_norm = 0.0;      // inf-norm of the accepted step, kelvin
  double merit = 0.0;
  double trust_radius = 0.0;
  int simulate_calls = 0;      // cumulative
  bool phase1 = false;
};

struct OptimizationReport {
  Eigen::VectorXd kappa;
  double objective = 0.0;         // J in (J/m^3)^2
  double objective_scaled = 0.0;  // J / ((rho c_p)^2 N_t), kelvin^2
  std::vector<IterationLog> history;
  int simulate_calls = 0;
  int phase1_iterations = 0;
  int iterations = 0;
  bool converged = false;
  std::string status;
  ConstraintMargins margins;
  double max_violation = 0.0;
  TrajectoryRecord trajectory;  // at the returned parameters
  PressureControl pressure;     // shifted source pressure
  double simulate_seconds = 0.0;
  double qp_seconds = 0.0;
  double total_seconds = 0.0;
};

// Phase 1: drives the scaled violations to zero by minimal-norm steps onto the
// linearized constraints. Returns kappa unchanged if it is already feasible.
// Throws InfeasibleError naming the binding constraints when it stalls.
Eigen::VectorXd find_feasible(const OptimizationProblem& problem, const Eigen::VectorXd& kappa0,
                              const SqpOptions& options = {}, OptimizationReport* report = nullptr);

// SQP with the exact objective Hessian, linearized constraints, a box trust
// region and an l1 merit line search. Runs phase 1 first.
OptimizationReport optimize(const OptimizationProblem& problem, const Eigen::VectorXd& kappa0,
                            const SqpOptions& options = {});

}  // namespace heatnet
