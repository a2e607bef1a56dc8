#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "heatnet/errors.hpp"
#include "heatnet/models.hpp"
#include "heatnet/scenario.hpp"
#include "heatnet/time_grid.hpp"

namespace heatnet {

// Source energy density u_T(t) and optionally its gradient w.r.t. parameters.
struct ControlSignal {
  std::function<double(double)> value;
  std::function<Eigen::RowVectorXd(double)> gradient;
  Index num_parameters = 0;

  static ControlSignal constant(double u) {
    ControlSignal c;
    c.value = [u](double) { return u; };
    return c;
  }
};

using LoadFunction = std::function<ConsumerLoad(double)>;

inline LoadFunction demand_load(DemandModel demand) {
  return [demand = std::move(demand)](double t) {
    ConsumerLoad load;
    load.demand = demand.at(t);
    return load;
  };
}

inline LoadFunction prescribed_flow_load(std::function<Eigen::VectorXd(double)> flows) {
  return [flows = std::move(flows)](double t) {
    ConsumerLoad load;
    load.flows = flows(t);
    load.prescribed = true;
    return load;
  };
}

struct SimulationOptions {
  double newton_tolerance = 1.0e-10;  // on ||F||_inf / max(||x_mu||_inf, 1)
  int max_newton_iterations = 25;
  bool record_states = false;
  bool record_flows = false;
  bool sensitivities = false;  // needs ControlSignal::gradient
};

struct TrajectoryRecord {
  std::vector<double> times;
  Eigen::VectorXd control;               // u_T at grid points
  Eigen::VectorXd feed_in;               // P = (u_T - e_R) sum q_c, W
  Eigen::VectorXd total_flow;            // sum q_c, m^3/s
  Eigen::MatrixXd outputs;               // times x consumers, J/m^3
  Eigen::MatrixXd pressure_differences;  // times x consumers, Pa
  Eigen::MatrixXd demand;                // times x consumers, W (zero for prescribed flows)
  Eigen::MatrixXd consumer_flows;        // times x consumers
  Eigen::MatrixXd pipe_flows;            // times x pipes, when record_flows
  Eigen::VectorXd source_flow;           // when record_flows
  std::vector<Eigen::VectorXd> states;   // model coordinates, when record_states
  std::vector<int> newton_iterations;    // per step
  int simulate_calls = 1;

  // Parameter sensitivities, when requested.
  Eigen::MatrixXd dcontrol;                // times x params
  Eigen::MatrixXd dfeed_in;                // times x params
  std::vector<Eigen::MatrixXd> doutputs;   // per time: consumers x params
  std::vector<Eigen::MatrixXd> dpressure;  // per time: consumers x params

  Index size() const { return static_cast<Index>(times.size()); }
  int total_newton_iterations() const {
    int s = 0;
    for (int i : newton_iterations) s += i;
    return s;
  }
};

// Uniform state at the control level u0: the exact steady state of lossless transport.
template <class Model>
Eigen::VectorXd stationary_init(const Model& model, double u0) {
  return model.initial_state(u0);
}

struct StepResult {
  Eigen::VectorXd state;
  CouplingState midpoint;  // algebraic variables at the converged midpoint
  int iterations = 0;
  double residual = 0.0;
};

namespace detail {

inline std::string describe_history(const std::vector<double>& history) {
  std::ostringstream out;
  for (std::size_t i = 0; i < history.size(); ++i) out << (i ? ", " : "") << history[i];
  return out.str();
}

}  // namespace detail

// One implicit midpoint step x1 = x0 + dt f((x0 + x1)/2, u_mid) solved by
// Newton with the analytic Jacobian and residual-halving backtracking. On
// return `ws` holds the factored step matrix at the converged point when
// `factor_at_solution` is set.
template <class Model>
StepResult midpoint_step(const Model& model, typename Model::Workspace& ws, const FlowCoupling& coupling,
                         const Eigen::VectorXd& x0, double u_mid, const ConsumerLoad& load, double dt,
                         const SimulationOptions& options, bool factor_at_solution,
                         Eigen::VectorXd* chord_guess = nullptr, Index step_index = 0) {
  const double scale = std::max(x0.lpNorm<Eigen::Infinity>(), 1.0);
  const double round_off = 16.0 * std::numeric_limits<double>::epsilon() * scale;

  StepResult result;
  Eigen::VectorXd x1 = x0;
  Eigen::VectorXd residual;
  auto evaluate = [&](const Eigen::VectorXd& candidate, CouplingState& cs, Eigen::VectorXd& f_out) {
    const Eigen::VectorXd xm = 0.5 * (x0 + candidate);
    cs = coupling.evaluate(model.outputs(xm), load, true, chord_guess);
    f_out = candidate - x0 - dt * model.rhs(ws, cs.gamma, xm, u_mid);
  };

  CouplingState cs;
  evaluate(x1, cs, residual);
  double norm = residual.lpNorm<Eigen::Infinity>() / scale;
  std::vector<double> history{norm};
  bool converged = false;
  for (int it = 0; it <= options.max_newton_iterations; ++it) {
    if (norm <= options.newton_tolerance) {
      converged = true;
      result.iterations = it;
      break;
    }
    if (it == options.max_newton_iterations) break;
    const Eigen::VectorXd xm = 0.5 * (x0 + x1);
    model.jacobian(ws, cs.dgamma_dy, xm, u_mid);
    model.factor_step(ws, 0.5 * dt);
    const Eigen::VectorXd step = -model.solve(ws, residual);

    double t = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 12; ++halving, t *= 0.5) {
      CouplingState trial_cs;
      Eigen::VectorXd trial_residual;
      const Eigen::VectorXd trial = x1 + t * step;
      try {
        evaluate(trial, trial_cs, trial_residual);
      } catch (const ConsumerEnergyError&) {
        continue;
      }
      const double trial_norm = trial_residual.lpNorm<Eigen::Infinity>() / scale;
      if (trial_norm < norm || halving == 11) {
        x1 = trial;
        cs = std::move(trial_cs);
        residual = std::move(trial_residual);
        norm = trial_norm;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // Every trial hit the energy floor; restore the model state at x1.
      evaluate(x1, cs, residual);
      break;
    }
    history.push_back(norm);
    if ((t * step).lpNorm<Eigen::Infinity>() <= round_off && norm <= 1.0e-8) {
      converged = true;
      result.iterations = it + 1;
      break;
    }
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "midpoint Newton failed in step " << step_index << "; scaled residual history: "
        << detail::describe_history(history);
    throw NumericalError(msg.str());
  }
  if (factor_at_solution) {
    model.jacobian(ws, cs.dgamma_dy, 0.5 * (x0 + x1), u_mid);
    model.factor_step(ws, 0.5 * dt);
  }
  if (chord_guess != nullptr) {
    const Index nc = coupling.hydraulics().network().num_consumers();
    *chord_guess = cs.flow.q_tilde.tail(cs.flow.q_tilde.size() - nc);
  }
  result.state = std::move(x1);
  result.midpoint = std::move(cs);
  result.residual = norm;
  return result;
}

// d x_{mu+1}/d kappa from d x_mu/d kappa using the factored step matrix in `ws`:
// (I - dt/2 J) S1 = (I + dt/2 J) S0 + dt b du_mid.
template <class Model>
Eigen::MatrixXd propagate_step(const Model& model, typename Model::Workspace& ws, double dt,
                               const Eigen::MatrixXd& s0, const Eigen::VectorXd& input_column,
                               const Eigen::RowVectorXd& du_mid) {
  Eigen::MatrixXd rhs = s0 + 0.5 * dt * model.jacobian_times(ws, s0);
  rhs.noalias() += dt * input_column * du_mid;
  return model.solve(ws, rhs);
}

// Full-state Jacobian of e' including flow feedback through the consumer energies.
template <class Model>
Eigen::MatrixXd analytic_jacobian(const Model& model, const FlowCoupling& coupling, const Eigen::VectorXd& x,
                                  double u, const ConsumerLoad& load) {
  auto ws = model.workspace();
  const CouplingState cs = coupling.evaluate(model.outputs(x), load, true);
  model.rhs(ws, cs.gamma, x, u);
  model.jacobian(ws, cs.dgamma_dy, x, u);
  return model.dense_jacobian(ws);
}

// Integrates the DAE over `grid` from state x0 with the implicit midpoint
// rule. Outputs, feed-in and pressure differences are recorded at every grid
// point; sensitivities follow the forward tangent recursion when requested.
template <class Model>
TrajectoryRecord simulate(const Model& model, const FlowCoupling& coupling, const TimeGrid& grid,
                          const ControlSignal& control, const LoadFunction& load, const Eigen::VectorXd& x0,
                          const SimulationOptions& options = {},
                          const Eigen::MatrixXd* initial_sensitivity = nullptr) {
  const Index nt = grid.size();
  const Index nc = coupling.hydraulics().network().num_consumers();
  const Index np = coupling.hydraulics().network().num_pipes();
  const bool sens = options.sensitivities;
  const Index nk = sens ? control.num_parameters : 0;
  if (sens && !control.gradient) throw InputError("sensitivities requested without a control gradient");
  if (x0.size() != model.dim()) throw InputError("initial state does not match the model dimension");

  TrajectoryRecord rec;
  rec.times.resize(nt);
  rec.control.resize(nt);
  rec.feed_in.resize(nt);
  rec.total_flow.resize(nt);
  rec.outputs.resize(nt, nc);
  rec.pressure_differences.resize(nt, nc);
  rec.demand = Eigen::MatrixXd::Zero(nt, nc);
  rec.consumer_flows.resize(nt, nc);
  if (options.record_flows) {
    rec.pipe_flows.resize(nt, np);
    rec.source_flow.resize(nt);
  }
  if (sens) {
    rec.dcontrol.resize(nt, nk);
    rec.dfeed_in.resize(nt, nk);
    rec.doutputs.resize(nt);
    rec.dpressure.resize(nt);
  }
  rec.newton_iterations.reserve(nt > 0 ? nt - 1 : 0);

  Eigen::VectorXd x = x0;
  Eigen::MatrixXd s;
  if (sens) {
    s = initial_sensitivity != nullptr ? *initial_sensitivity : Eigen::MatrixXd::Zero(model.dim(), nk);
    if (s.rows() != model.dim() || s.cols() != nk) throw InputError("initial sensitivity has the wrong shape");
  }
  Eigen::VectorXd chords;
  auto ws = model.workspace();

  auto record = [&](Index i) {
    const double t = grid.time(i);
    const double u = control.value(t);
    const ConsumerLoad l = load(t);
    const Eigen::VectorXd y = model.outputs(x);
    CouplingState cs;
    try {
      cs = coupling.evaluate(y, l, sens, chords.size() ? &chords : nullptr);
    } catch (const ConsumerEnergyError& e) {
      std::ostringstream msg;
      msg << "at t = " << t << " s: " << e.what();
      throw ConsumerEnergyError(e.consumer(), e.difference(), msg.str());
    }
    rec.times[i] = t;
    rec.control[i] = u;
    rec.outputs.row(i) = y.transpose();
    rec.consumer_flows.row(i) = cs.consumer_flow.transpose();
    if (!l.prescribed) rec.demand.row(i) = l.demand.transpose();
    rec.total_flow[i] = cs.consumer_flow.sum();
    rec.feed_in[i] = coupling.feed_in(cs, u);
    rec.pressure_differences.row(i) = coupling.hydraulics().pressure_differences(cs.flow).transpose();
    if (options.record_flows) {
      rec.pipe_flows.row(i) = cs.flow.q.transpose();
      rec.source_flow[i] = cs.flow.q_source;
    }
    if (options.record_states) rec.states.push_back(x);
    if (sens) {
      const Eigen::RowVectorXd du = control.gradient(t);
      const Eigen::MatrixXd dy = model.output_matrix() * s;
      rec.dcontrol.row(i) = du;
      rec.doutputs[i] = dy;
      rec.dfeed_in.row(i) = rec.total_flow[i] * du +
                            (u - coupling.return_energy()) * (cs.dflow_dy.transpose() * dy);
      rec.dpressure[i] = coupling.pressure_sensitivity(cs) * dy;
    }
  };

  record(0);
  for (Index mu = 0; mu + 1 < nt; ++mu) {
    const double tm = grid.time(mu) + 0.5 * grid.dt;
    const double um = control.value(tm);
    StepResult step;
    try {
      step = midpoint_step(model, ws, coupling, x, um, load(tm), grid.dt, options, sens, &chords, mu);
    } catch (const ConsumerEnergyError& e) {
      std::ostringstream msg;
      msg << "in step " << mu << " (t = " << grid.time(mu) << " s): " << e.what();
      throw ConsumerEnergyError(e.consumer(), e.difference(), msg.str());
    }
    if (sens) {
      s = propagate_step(model, ws, grid.dt, s, model.input_vector(step.midpoint.gamma), control.gradient(tm));
    }
    x = std::move(step.state);
    rec.newton_iterations.push_back(step.iterations);
    record(mu + 1);
  }
  return rec;
}

}  // namespace heatnet
