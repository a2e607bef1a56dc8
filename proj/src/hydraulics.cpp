#include "heatnet/hydraulics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace heatnet {

double colebrook_lambda(double relative_roughness, double reynolds) {
  if (!(reynolds > 4000.0)) {
    throw InputError("colebrook_lambda: Reynolds number must exceed 4000 (turbulent regime)");
  }
  if (!(relative_roughness >= 0.0)) {
    throw InputError("colebrook_lambda: relative roughness must be nonnegative");
  }
  // Newton on x = 1/sqrt(lambda): F(x) = x + 2 log10(k/3.7d + 2.51 x / Re).
  const double a = relative_roughness / 3.7;
  const double b = 2.51 / reynolds;
  const double ln10 = std::log(10.0);
  double x = 8.0;
  constexpr int kMaxIterations = 100;
  for (int it = 0; it < kMaxIterations; ++it) {
    const double arg = a + b * x;
    const double f = x + 2.0 * std::log10(arg);
    const double df = 1.0 + 2.0 * b / (ln10 * arg);
    const double step = f / df;
    x -= step;
    if (x <= 0.0) x = 1.0e-3;
    if (std::abs(step) <= 1.0e-15 * std::abs(x)) {
      return 1.0 / (x * x);
    }
  }
  std::ostringstream msg;
  msg << "colebrook_lambda did not converge after " << kMaxIterations << " iterations";
  throw NumericalError(msg.str());
}

void initialize_friction(Network& net, const FrictionConfig& config) {
  for (Index p = 0; p < net.num_pipes(); ++p) {
    const Pipe& pipe = net.pipes()[p];
    net.set_friction(p, colebrook_lambda(pipe.roughness / pipe.diameter, config.reference_reynolds));
  }
}

HydraulicModel::HydraulicModel(const Network& net, PhysicalConstants constants,
                               double regularization)
    : net_(net), constants_(constants), eps_(regularization) {
  const Index np = net_.num_pipes();
  const Index nc = net_.num_consumers();
  loops_ = fundamental_loops(net_);
  const Index nl = num_loops();

  area_.resize(np);
  resistance_.resize(np);
  for (Index p = 0; p < np; ++p) {
    const Pipe& pipe = net_.pipes()[p];
    if (!(pipe.friction > 0.0)) {
      throw InputError("pipe '" + pipe.id + "' has no friction factor; call initialize_friction()");
    }
    area_[p] = pipe.area();
    resistance_[p] = pipe.resistance(constants_.density);
  }

  consumer_map_ = Eigen::MatrixXd::Zero(np, nc);
  paths_.resize(nc);
  for (Index c = 0; c < nc; ++c) {
    paths_[c] = path_to_consumer(net_, c);
    for (const SignedEdge& e : paths_[c]) consumer_map_(e.pipe, c) += e.sign;
  }
  loop_incidence_ = Eigen::MatrixXd::Zero(np, nl);
  for (Index l = 0; l < nl; ++l) {
    for (const SignedEdge& e : loops_[l]) loop_incidence_(e.pipe, l) += e.sign;
  }
  flow_map_.resize(np, nc + nl);
  flow_map_ << consumer_map_, loop_incidence_;
  velocity_map_ = area_.cwiseInverse().asDiagonal() * flow_map_;
}

double HydraulicModel::friction_term(Index p, double v) const {
  return resistance_[p] * std::sqrt(v * v + eps_ * eps_) * v;
}

double HydraulicModel::friction_term_derivative(Index p, double v) const {
  const double s = std::sqrt(v * v + eps_ * eps_);
  return resistance_[p] * (s + v * v / s);
}

FlowField HydraulicModel::flow_from_independent(const Eigen::VectorXd& q_tilde) const {
  FlowField flow;
  flow.q_tilde = q_tilde;
  flow.q = flow_map_ * q_tilde;
  flow.v = flow.q.cwiseQuotient(area_);
  flow.q_source = q_tilde.head(net_.num_consumers()).sum();
  return flow;
}

Eigen::VectorXd HydraulicModel::loop_residuals_at(const Eigen::VectorXd& v) const {
  Eigen::VectorXd terms(v.size());
  for (Index p = 0; p < v.size(); ++p) terms[p] = friction_term(p, v[p]);
  return loop_incidence_.transpose() * terms;
}

Eigen::MatrixXd HydraulicModel::loop_jacobian_at(const Eigen::VectorXd& v) const {
  Eigen::VectorXd d(v.size());
  for (Index p = 0; p < v.size(); ++p) d[p] = friction_term_derivative(p, v[p]) / area_[p];
  return loop_incidence_.transpose() * d.asDiagonal() * loop_incidence_;
}

Eigen::VectorXd HydraulicModel::loop_residuals(const FlowField& flow) const {
  return loop_residuals_at(flow.v);
}

double HydraulicModel::loop_scale(const FlowField& flow) const {
  double scale = 0.0;
  for (const EdgePath& loop : loops_) {
    double sum = 0.0;
    for (const SignedEdge& e : loop) sum += std::abs(friction_term(e.pipe, flow.v[e.pipe]));
    scale = std::max(scale, sum);
  }
  return scale;
}

FlowField HydraulicModel::solve_loop_flows(const Eigen::VectorXd& q_consumers,
                                           const Eigen::VectorXd* chord_guess, double tolerance,
                                           int max_iterations) const {
  const Index nc = net_.num_consumers();
  const Index nl = num_loops();
  if (q_consumers.size() != nc) throw InputError("solve_loop_flows: consumer flow size mismatch");
  Eigen::VectorXd q_tilde(nc + nl);
  q_tilde.head(nc) = q_consumers;
  if (chord_guess != nullptr && chord_guess->size() == nl) {
    q_tilde.tail(nl) = *chord_guess;
  } else {
    q_tilde.tail(nl).setZero();
  }
  FlowField flow = flow_from_independent(q_tilde);
  if (nl == 0) return flow;

  Eigen::VectorXd residual = loop_residuals_at(flow.v);
  double norm = residual.lpNorm<Eigen::Infinity>();
  for (int it = 0; it < max_iterations; ++it) {
    const double scale = loop_scale(flow);
    if (norm <= tolerance * scale || scale == 0.0) {
      flow.iterations = it;
      return flow;
    }
    Eigen::VectorXd step = loop_jacobian_at(flow.v).ldlt().solve(-residual);
    double t = 1.0;
    FlowField trial;
    Eigen::VectorXd trial_residual;
    double trial_norm = 0.0;
    for (int halving = 0; halving < 40; ++halving) {
      Eigen::VectorXd qt = flow.q_tilde;
      qt.tail(nl) += t * step;
      trial = flow_from_independent(qt);
      trial_residual = loop_residuals_at(trial.v);
      trial_norm = trial_residual.lpNorm<Eigen::Infinity>();
      if (trial_norm < norm || t < 1.0e-10) break;
      t *= 0.5;
    }
    const double chord_scale = std::max(flow.q_tilde.lpNorm<Eigen::Infinity>(), 1.0e-300);
    const bool stalled = (t * step).lpNorm<Eigen::Infinity>() <= 4.0 * std::numeric_limits<double>::epsilon() * chord_scale;
    flow = std::move(trial);
    residual = std::move(trial_residual);
    norm = trial_norm;
    if (stalled) {
      // Round-off floor reached; accept if the loop contract still holds.
      if (norm <= 1.0e-8 * loop_scale(flow)) {
        flow.iterations = it + 1;
        return flow;
      }
      break;
    }
  }
  std::ostringstream msg;
  msg << "loop flow Newton did not converge after " << max_iterations
      << " iterations (residual " << norm << " Pa)";
  throw NumericalError(msg.str());
}

Eigen::MatrixXd HydraulicModel::flow_derivative(const FlowField& flow) const {
  const Index nl = num_loops();
  if (nl == 0) return consumer_map_;
  Eigen::VectorXd d(flow.v.size());
  for (Index p = 0; p < d.size(); ++p) d[p] = friction_term_derivative(p, flow.v[p]) / area_[p];
  const Eigen::MatrixXd lt_d = loop_incidence_.transpose() * d.asDiagonal();
  const Eigen::MatrixXd jac = lt_d * loop_incidence_;
  const Eigen::MatrixXd dchord = jac.ldlt().solve(-(lt_d * consumer_map_));
  return consumer_map_ + loop_incidence_ * dchord;
}

Eigen::VectorXd HydraulicModel::pressure_differences(const FlowField& flow) const {
  const Index nc = net_.num_consumers();
  Eigen::VectorXd dp(nc);
  for (Index c = 0; c < nc; ++c) dp[c] = pressure_difference_along(flow, c, paths_[c]);
  return dp;
}

double HydraulicModel::pressure_difference_along(const FlowField& flow, Index consumer,
                                                 const EdgePath& path) const {
  const double z_source = net_.nodes()[net_.source_node()].z;
  const double z_consumer = net_.nodes()[net_.consumer_node(consumer)].z;
  double dp = constants_.density * constants_.gravity * (z_source - z_consumer);
  for (const SignedEdge& e : path) dp -= e.sign * friction_term(e.pipe, flow.v[e.pipe]);
  return dp;
}

Eigen::MatrixXd HydraulicModel::pressure_derivative(const FlowField& flow) const {
  const Index nc = net_.num_consumers();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(nc, net_.num_pipes());
  for (Index c = 0; c < nc; ++c) {
    for (const SignedEdge& e : paths_[c]) {
      d(c, e.pipe) -= e.sign * friction_term_derivative(e.pipe, flow.v[e.pipe]) / area_[e.pipe];
    }
  }
  return d;
}

Eigen::VectorXd consumer_flows(const Eigen::VectorXd& demand, const Eigen::VectorXd& consumer_energy,
                               double return_energy, double floor) {
  if (demand.size() != consumer_energy.size()) {
    throw InputError("consumer_flows: demand and energy sizes differ");
  }
  Eigen::VectorXd q(demand.size());
  for (Index i = 0; i < demand.size(); ++i) {
    const double diff = consumer_energy[i] - return_energy;
    if (!(diff > floor)) {
      std::ostringstream msg;
      msg << "consumer " << i << " energy difference " << diff
          << " J/m^3 is at or below the floor " << floor;
      throw ConsumerEnergyError(i, diff, msg.str());
    }
    q[i] = demand[i] / diff;
  }
  return q;
}

PressureControl posteriori_pressure_control(const Eigen::MatrixXd& differences, double p_min) {
  PressureControl out;
  const Index nt = differences.rows();
  out.source_pressure.resize(nt);
  out.pressures.resize(nt, differences.cols());
  for (Index t = 0; t < nt; ++t) {
    const double lowest = differences.row(t).minCoeff();
    out.source_pressure[t] = p_min - lowest;
    out.pressures.row(t) = (differences.row(t).array() + out.source_pressure[t]).matrix();
  }
  return out;
}

PumpingPower pumping_power(const Eigen::VectorXd& source_dp, const Eigen::MatrixXd& demand,
                           const Eigen::MatrixXd& consumer_energy, double return_energy) {
  PumpingPower out;
  const Index nt = source_dp.size();
  out.power.resize(nt);
  double min_diff = std::numeric_limits<double>::infinity();
  double max_total = 0.0;
  for (Index t = 0; t < nt; ++t) {
    double flow = 0.0;
    for (Index i = 0; i < demand.cols(); ++i) {
      const double diff = consumer_energy(t, i) - return_energy;
      if (!(diff > 0.0)) throw InputError("pumping_power: consumer energy must exceed return energy");
      flow += demand(t, i) / diff;
      min_diff = std::min(min_diff, diff);
    }
    out.power[t] = source_dp[t] * flow;
    max_total = std::max(max_total, demand.row(t).sum());
  }
  const double max_dp = nt > 0 ? source_dp.maxCoeff() : 0.0;
  out.bound = nt > 0 ? max_dp * max_total / min_diff : 0.0;
  return out;
}

double pumping_power(double source_dp, const Eigen::VectorXd& demand,
                     const Eigen::VectorXd& consumer_energy, double return_energy) {
  Eigen::VectorXd dp(1);
  dp[0] = source_dp;
  return pumping_power(dp, demand.transpose(), consumer_energy.transpose(), return_energy).power[0];
}

}  // namespace heatnet
