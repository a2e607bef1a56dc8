#include "heatnet/control.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

#include "heatnet/qp.hpp"
#include "heatnet/sensitivity.hpp"

namespace heatnet {

double FourierControl::omega() const { return 2.0 * std::numbers::pi / period; }

Eigen::RowVectorXd FourierControl::basis(double t) const {
  Eigen::RowVectorXd phi(num_parameters());
  phi[0] = 1.0;
  const double w = omega();
  for (int k = 1; k <= harmonics; ++k) {
    phi[k] = std::cos(k * w * t);
    phi[harmonics + k] = std::sin(k * w * t);
  }
  return phi;
}

Eigen::RowVectorXd FourierControl::basis_derivative(double t) const {
  Eigen::RowVectorXd phi(num_parameters());
  phi[0] = 0.0;
  const double w = omega();
  for (int k = 1; k <= harmonics; ++k) {
    phi[k] = -k * w * std::sin(k * w * t);
    phi[harmonics + k] = k * w * std::cos(k * w * t);
  }
  return phi;
}

ControlSignal FourierControl::signal(const Eigen::VectorXd& kappa) const {
  if (kappa.size() != num_parameters()) throw InputError("control parameter vector has the wrong length");
  ControlSignal s;
  const FourierControl self = *this;
  s.value = [self, kappa](double t) { return self.value(kappa, t); };
  s.gradient = [self](double t) { return self.basis(t); };
  s.num_parameters = num_parameters();
  return s;
}

Eigen::VectorXd FourierControl::constant(double u) const {
  Eigen::VectorXd k = Eigen::VectorXd::Zero(num_parameters());
  k[0] = u;
  return k;
}

Eigen::VectorXd FourierControl::fit(const std::vector<double>& times, const Eigen::VectorXd& values) const {
  const Index n = static_cast<Index>(times.size());
  if (values.size() != n || n < num_parameters()) throw InputError("too few control samples to fit");
  Eigen::MatrixXd phi(n, num_parameters());
  for (Index i = 0; i < n; ++i) phi.row(i) = basis(times[i]);
  return phi.colPivHouseholderQr().solve(values);
}

ObjectiveValue evaluate_objective(const FourierControl& control, const Eigen::VectorXd& kappa,
                                  const TimeGrid& grid, const ObjectiveConfig& config) {
  if (config.eta1 < 0.0) throw InputError("eta1 must be nonnegative");
  const Index nt = grid.size();
  const Index np = control.num_parameters();
  Eigen::MatrixXd phi(nt, np);
  Eigen::MatrixXd dphi(nt, np);
  for (Index i = 0; i < nt; ++i) {
    phi.row(i) = control.basis(grid.time(i));
    dphi.row(i) = control.basis_derivative(grid.time(i));
  }
  const Eigen::VectorXd rate = dphi * kappa;
  const Eigen::VectorXd offset = (phi * kappa).array() - config.eta2;
  ObjectiveValue out;
  out.value = config.eta1 * rate.squaredNorm() + offset.squaredNorm();
  out.gradient = 2.0 * (config.eta1 * dphi.transpose() * rate + phi.transpose() * offset);
  out.hessian = 2.0 * (config.eta1 * dphi.transpose() * dphi + phi.transpose() * phi);
  return out;
}

void ConstraintSet::validate() const {
  if (std::isfinite(spread_limit) && std::isfinite(p_max) && spread_limit > p_max - p_min) {
    throw InputError("pressure spread limit exceeds p_max - p_min");
  }
  if (std::isfinite(e_min) && !(e_min > return_energy)) {
    throw InputError("minimal consumer energy must exceed the return energy");
  }
  if (!(feed_in_cap > 0.0) || !(relaxed_cap > 0.0)) throw InputError("feed-in caps must be positive");
}

ConstraintSet ConstraintSet::from_scenario(const ScenarioConfig& cfg, const DemandStats& stats,
                                           const PhysicalConstants& c) {
  ConstraintSet s;
  s.u_max = energy_from_celsius(cfg.max_network_temperature_c, c);
  s.e_min = energy_from_celsius(cfg.min_consumer_temperature_c, c);
  s.p_min = bar_to_pa(cfg.p_min_bar);
  s.p_max = bar_to_pa(cfg.p_max_bar);
  s.spread_limit = bar_to_pa(cfg.spread_limit_bar);
  s.feed_in_cap = stats.feed_in_cap;
  s.relaxed_cap = stats.maximum;
  s.relaxation_end = cfg.t0_s + cfg.relaxation_period_s;
  s.return_energy = energy_from_celsius(cfg.return_temperature_c, c);
  s.validate();
  return s;
}

const char* constraint_name(ConstraintKind k) {
  switch (k) {
    case ConstraintKind::control: return "control";
    case ConstraintKind::consumer_energy: return "consumer_energy";
    case ConstraintKind::pressure_spread: return "pressure_spread";
    case ConstraintKind::feed_in: return "feed_in";
  }
  return "unknown";
}

namespace {

double feed_in_scale(const ConstraintSet& set) {
  if (std::isfinite(set.feed_in_cap)) return set.feed_in_cap;
  return std::isfinite(set.relaxed_cap) ? set.relaxed_cap : 1.0;
}

}  // namespace

ConstraintValues evaluate_constraints(const TrajectoryRecord& rec, const ConstraintSet& set,
                                      const PhysicalConstants& c) {
  const Index nt = rec.size();
  const Index nc = rec.outputs.cols();
  const bool sens = !rec.doutputs.empty();
  const Index np = sens ? rec.dcontrol.cols() : 0;
  const double ek = energy_per_kelvin(c);
  const double pscale = feed_in_scale(set);
  const bool spread_on = std::isfinite(set.spread_limit);
  const SpreadSeries spread = spread_on ? pressure_spread(rec) : SpreadSeries{};

  std::vector<double> g;
  std::vector<Eigen::RowVectorXd> grad;
  ConstraintValues out;
  auto push = [&](ConstraintRow row, double value, const Eigen::RowVectorXd& gr) {
    out.rows.push_back(row);
    g.push_back(value);
    if (sens) grad.push_back(gr);
  };
  const Eigen::RowVectorXd none;
  for (Index t = 0; t < nt; ++t) {
    if (std::isfinite(set.u_max)) {
      push({ConstraintKind::control, t, -1}, (rec.control[t] - set.u_max) / ek,
           sens ? Eigen::RowVectorXd(rec.dcontrol.row(t) / ek) : none);
    }
    if (std::isfinite(set.e_min)) {
      for (Index h = 0; h < nc; ++h) {
        push({ConstraintKind::consumer_energy, t, h}, (set.e_min - rec.outputs(t, h)) / ek,
             sens ? Eigen::RowVectorXd(-rec.doutputs[t].row(h) / ek) : none);
      }
    }
    if (spread_on) {
      push({ConstraintKind::pressure_spread, t, -1}, pa_to_bar(spread.value[t] - set.spread_limit),
           sens ? Eigen::RowVectorXd(spread.gradient.row(t) / kPascalPerBar) : none);
    }
    const double cap = set.cap_at(rec.times[t]);
    if (std::isfinite(cap)) {
      push({ConstraintKind::feed_in, t, -1}, (rec.feed_in[t] - cap) / pscale,
           sens ? Eigen::RowVectorXd(rec.dfeed_in.row(t) / pscale) : none);
    }
  }
  out.g = Eigen::Map<const Eigen::VectorXd>(g.data(), static_cast<Index>(g.size()));
  if (sens) {
    out.jacobian.resize(static_cast<Index>(grad.size()), np);
    for (std::size_t i = 0; i < grad.size(); ++i) out.jacobian.row(static_cast<Index>(i)) = grad[i];
  }
  return out;
}

ConstraintMargins constraint_margins(const ConstraintValues& values) {
  ConstraintMargins m;
  for (std::size_t i = 0; i < values.rows.size(); ++i) {
    const double slack = -values.g[static_cast<Index>(i)];
    switch (values.rows[i].kind) {
      case ConstraintKind::control: m.control_k = std::min(m.control_k, slack); break;
      case ConstraintKind::consumer_energy: m.consumer_k = std::min(m.consumer_k, slack); break;
      case ConstraintKind::pressure_spread: m.spread_bar = std::min(m.spread_bar, slack); break;
      case ConstraintKind::feed_in: m.feed_in_relative = std::min(m.feed_in_relative, slack); break;
    }
  }
  return m;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Iterate of the scaled problem: x = kappa / (rho c_p).
struct Iterate {
  Eigen::VectorXd x;
  TrajectoryRecord rec;
  ConstraintValues cv;
  double f = 0.0;
  Eigen::VectorXd grad;
};

class Evaluator {
 public:
  Evaluator(const OptimizationProblem& p, OptimizationReport* report)
      : p_(p), report_(report), scale_(energy_per_kelvin(p.constants)),
        nt_(static_cast<double>(p.grid.size())) {}

  double scale() const { return scale_; }

  Iterate at(const Eigen::VectorXd& x) {
    Iterate it;
    it.x = x;
    const Eigen::VectorXd kappa = scale_ * x;
    const auto start = Clock::now();
    it.rec = p_.oracle(kappa, true);
    if (report_ != nullptr) {
      report_->simulate_seconds += seconds_since(start);
      ++report_->simulate_calls;
    }
    it.cv = evaluate_constraints(it.rec, p_.constraints, p_.constants);
    if (it.cv.jacobian.size()) it.cv.jacobian *= scale_;
    const ObjectiveValue obj = evaluate_objective(p_.control, kappa, p_.grid, p_.objective);
    it.f = obj.value / (scale_ * scale_ * nt_);
    it.grad = obj.gradient / (scale_ * nt_);
    return it;
  }

  Eigen::MatrixXd hessian() const {
    const ObjectiveValue obj =
        evaluate_objective(p_.control, Eigen::VectorXd::Zero(p_.control.num_parameters()), p_.grid, p_.objective);
    return obj.hessian / nt_;
  }

 private:
  const OptimizationProblem& p_;
  OptimizationReport* report_;
  double scale_;
  double nt_;
};

struct StepSolution {
  Eigen::VectorXd d;
  Eigen::VectorXd multipliers;  // per constraint row
  double relaxation = 0.0;      // theta used
  bool ok = false;
};

// min 1/2 d^T H d + c^T d  s.t.  g + G d <= theta g_+,  |d|_inf <= radius.
// Rows that cannot become active inside the box are dropped.
StepSolution solve_step(const Eigen::MatrixXd& h, const Eigen::VectorXd& c, const Eigen::VectorXd& g,
                        const Eigen::MatrixXd& jac, double radius, double* qp_seconds) {
  const Index n = c.size();
  std::vector<Index> keep;
  for (Index i = 0; i < g.size(); ++i) {
    if (g[i] + jac.row(i).lpNorm<1>() * radius > 0.0) keep.push_back(i);
  }
  const Index m = static_cast<Index>(keep.size());
  Eigen::MatrixXd normals(m + 2 * n, n);
  Eigen::VectorXd bounds(m + 2 * n);
  for (Index k = 0; k < m; ++k) normals.row(k) = -jac.row(keep[k]);
  normals.block(m, 0, n, n).setIdentity();
  normals.block(m + n, 0, n, n) = -Eigen::MatrixXd::Identity(n, n);
  bounds.segment(m, 2 * n).setConstant(-radius);

  StepSolution out;
  const auto start = Clock::now();
  for (double theta : {0.0, 0.5, 0.75, 0.9, 1.0}) {
    for (Index k = 0; k < m; ++k) {
      const double gi = g[keep[k]];
      bounds[k] = gi - theta * std::max(gi, 0.0);
    }
    const QpResult qp = solve_qp(h, c, normals, bounds);
    if (qp.feasible) {
      out.d = qp.x;
      out.multipliers = Eigen::VectorXd::Zero(g.size());
      for (Index k = 0; k < m; ++k) out.multipliers[keep[k]] = qp.multipliers[k];
      out.relaxation = theta;
      out.ok = true;
      break;
    }
  }
  if (qp_seconds != nullptr) *qp_seconds += seconds_since(start);
  return out;
}

double positive_sum(const Eigen::VectorXd& v) { return v.cwiseMax(0.0).sum(); }

std::string describe_binding(const ConstraintValues& cv, const TrajectoryRecord& rec) {
  std::vector<Index> order(cv.g.size());
  for (Index i = 0; i < cv.g.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](Index a, Index b) { return cv.g[a] > cv.g[b]; });
  std::ostringstream msg;
  msg << "binding constraints:";
  for (std::size_t k = 0; k < std::min<std::size_t>(order.size(), 8); ++k) {
    const ConstraintRow& r = cv.rows[order[k]];
    if (cv.g[order[k]] <= 0.0) break;
    msg << "\n  " << constraint_name(r.kind) << " t=" << rec.times[r.time] << "s";
    if (r.consumer >= 0) msg << " consumer=" << r.consumer;
    msg << " violation=" << cv.g[order[k]];
  }
  return msg.str();
}

Iterate phase_one(Evaluator& ev, const OptimizationProblem& problem, Iterate it, const SqpOptions& opt,
                  OptimizationReport* report) {
  const Index n = it.x.size();
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(n, n);
  double radius = opt.initial_trust_radius;
  int iterations = 0;
  while (it.cv.max_violation() > opt.feasibility_tolerance) {
    if (iterations >= opt.max_phase1_iterations) {
      throw InfeasibleError("no feasible control found within the phase-1 iteration limit; " +
                            describe_binding(it.cv, it.rec));
    }
    ++iterations;
    const double phi = it.cv.g.cwiseMax(0.0).squaredNorm();
    const StepSolution step = solve_step(identity, Eigen::VectorXd::Zero(n), it.cv.g, it.cv.jacobian, radius,
                                         report ? &report->qp_seconds : nullptr);
    if (!step.ok) throw NumericalError("phase-1 step subproblem failed");
    const double dn = step.d.lpNorm<Eigen::Infinity>();
    if (dn <= opt.step_tolerance) {
      throw InfeasibleError("phase 1 stalled at a point of minimal violation; " + describe_binding(it.cv, it.rec));
    }
    bool accepted = false;
    double alpha = 1.0;
    for (int ls = 0; ls < opt.max_line_search; ++ls, alpha *= 0.5) {
      Iterate trial;
      try {
        trial = ev.at(it.x + alpha * step.d);
      } catch (const NumericalError&) {
        continue;
      }
      const double phi_trial = trial.cv.g.cwiseMax(0.0).squaredNorm();
      if (phi_trial <= (1.0 - 1.0e-4 * alpha) * phi) {
        it = std::move(trial);
        accepted = true;
        break;
      }
    }
    if (report != nullptr) {
      report->history.push_back({iterations, it.f, it.cv.max_violation(), accepted ? alpha * dn : 0.0, phi,
                                 radius, report->simulate_calls, true});
    }
    if (accepted) {
      if (alpha == 1.0 && dn >= 0.99 * radius) radius *= 2.0;
    } else {
      radius = 0.25 * dn;
      if (radius <= opt.step_tolerance) {
        throw InfeasibleError("phase 1 stalled; " + describe_binding(it.cv, it.rec));
      }
    }
  }
  if (report != nullptr) report->phase1_iterations = iterations;
  return it;
}

void check_bounds(const ConstraintSet& set) {
  if (std::isfinite(set.e_min) && std::isfinite(set.u_max) && set.e_min >= set.u_max) {
    throw InfeasibleError("minimal consumer energy is not below the maximal control; binding constraints:\n  "
                          "consumer_energy and control at every time");
  }
}

}  // namespace

Eigen::VectorXd find_feasible(const OptimizationProblem& problem, const Eigen::VectorXd& kappa0,
                              const SqpOptions& options, OptimizationReport* report) {
  check_bounds(problem.constraints);
  Evaluator ev(problem, report);
  Iterate it = ev.at(kappa0 / ev.scale());
  if (it.cv.max_violation() <= options.feasibility_tolerance) {
    if (report != nullptr) report->phase1_iterations = 0;
    return kappa0;
  }
  it = phase_one(ev, problem, std::move(it), options, report);
  return ev.scale() * it.x;
}

OptimizationReport optimize(const OptimizationProblem& problem, const Eigen::VectorXd& kappa0,
                            const SqpOptions& options) {
  const auto start = Clock::now();
  check_bounds(problem.constraints);
  if (kappa0.size() != problem.control.num_parameters()) throw InputError("initial parameters have the wrong length");
  OptimizationReport report;
  Evaluator ev(problem, &report);
  Iterate it = ev.at(kappa0 / ev.scale());
  it = phase_one(ev, problem, std::move(it), options, &report);

  const Eigen::MatrixXd h = ev.hessian();
  double radius = options.initial_trust_radius;
  double penalty = 1.0;
  int stagnant = 0;
  report.status = "iteration limit reached";
  for (int k = 1; k <= options.max_iterations; ++k) {
    const StepSolution step = solve_step(h, it.grad, it.cv.g, it.cv.jacobian, radius, &report.qp_seconds);
    if (!step.ok) throw NumericalError("SQP step subproblem failed");
    const double dn = step.d.lpNorm<Eigen::Infinity>();
    const double viol = it.cv.max_violation();
    if (dn <= options.step_tolerance && viol <= options.feasibility_tolerance) {
      report.converged = true;
      report.status = "converged";
      break;
    }
    if (step.multipliers.size()) penalty = std::max(penalty, 1.1 * step.multipliers.lpNorm<Eigen::Infinity>());
    const Eigen::VectorXd lin = it.cv.g + it.cv.jacobian * step.d;
    const double predicted = -(it.grad.dot(step.d) + 0.5 * step.d.dot(h * step.d)) +
                             penalty * (positive_sum(it.cv.g) - positive_sum(lin));
    const double merit = it.f + penalty * positive_sum(it.cv.g);

    bool accepted = false;
    double alpha = 1.0;
    double merit_new = merit;
    for (int ls = 0; ls < options.max_line_search; ++ls, alpha *= 0.5) {
      Iterate trial;
      try {
        trial = ev.at(it.x + alpha * step.d);
      } catch (const NumericalError&) {
        continue;
      }
      const double m_trial = trial.f + penalty * positive_sum(trial.cv.g);
      if (m_trial <= merit - 1.0e-4 * alpha * std::max(predicted, 0.0)) {
        merit_new = m_trial;
        it = std::move(trial);
        accepted = true;
        break;
      }
    }
    report.history.push_back({k, it.f, it.cv.max_violation(), accepted ? alpha * dn : 0.0,
                              accepted ? merit_new : merit, radius, report.simulate_calls, false});
    report.iterations = k;
    if (!accepted) {
      radius = 0.25 * dn;
      if (radius <= options.step_tolerance) {
        report.converged = it.cv.max_violation() <= options.feasibility_tolerance;
        report.status = "stalled: no merit decrease along the step";
        break;
      }
      continue;
    }
    if (alpha == 1.0 && dn >= 0.99 * radius) radius *= 2.0;
    if (std::abs(merit - merit_new) <= 1.0e-12 * std::max(1.0, std::abs(merit))) {
      if (++stagnant >= 3 && it.cv.max_violation() <= options.feasibility_tolerance) {
        report.converged = true;
        report.status = "converged: merit stagnated";
        break;
      }
    } else {
      stagnant = 0;
    }
  }

  report.kappa = ev.scale() * it.x;
  const ObjectiveValue obj = evaluate_objective(problem.control, report.kappa, problem.grid, problem.objective);
  report.objective = obj.value;
  report.objective_scaled = it.f;
  report.max_violation = it.cv.max_violation();
  report.margins = constraint_margins(it.cv);
  report.pressure = posteriori_pressure_control(it.rec.pressure_differences, problem.constraints.p_min);
  report.trajectory = std::move(it.rec);
  report.trajectory.simulate_calls = report.simulate_calls;
  report.total_seconds = seconds_since(start);
  return report;
}

}  // namespace heatnet
