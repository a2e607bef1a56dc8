#include <doctest.h>

#include <cmath>
#include <limits>

#include "heatnet/control.hpp"
#include "heatnet/system.hpp"
#include "test_support.hpp"

using namespace heatnet;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Fixture {
  std::shared_ptr<System> sys;
  OptimizationProblem problem;
};

Fixture make_fixture(const char* network, ScenarioConfig sc, int harmonics, CellSpec cells) {
  auto sys = std::make_shared<System>(build_system(test::fixture_network(network, false), sc, cells));
  return {sys, make_problem<FullOrderModel>(*sys, sys->fom, harmonics)};
}

ConstraintSet unconstrained() {
  ConstraintSet s;
  s.p_min = 0.0;
  return s;
}

}  // namespace

TEST_CASE("fourier basis and fit") {
  FourierControl c;
  c.harmonics = 3;
  CHECK(c.num_parameters() == 7);
  Eigen::VectorXd k(7);
  k << 5.0, 1.0, -0.5, 0.25, 0.3, 0.0, -0.2;
  const double w = c.omega();
  const double t = 12345.0;
  double v = k[0];
  double d = 0.0;
  for (int j = 1; j <= 3; ++j) {
    v += k[j] * std::cos(j * w * t) + k[3 + j] * std::sin(j * w * t);
    d += -k[j] * j * w * std::sin(j * w * t) + k[3 + j] * j * w * std::cos(j * w * t);
  }
  CHECK(c.value(k, t) == doctest::Approx(v));
  CHECK(c.derivative(k, t) == doctest::Approx(d));
  std::vector<double> times;
  Eigen::VectorXd samples(100);
  for (int i = 0; i < 100; ++i) {
    times.push_back(i * 900.0);
    samples[i] = c.value(k, times.back());
  }
  CHECK((c.fit(times, samples) - k).norm() <= 1e-10 * k.norm());
  CHECK_THROWS_AS(c.signal(Eigen::VectorXd::Zero(3)), InputError);
}

TEST_CASE("objective closed forms") {
  FourierControl c;
  c.harmonics = 2;
  const TimeGrid grid(0.0, 3.0 * kSecondsPerDay, 300.0);
  const ObjectiveConfig cfg{1.0e8, 3.0};
  {
    Eigen::VectorXd k = c.constant(3.0);
    CHECK(evaluate_objective(c, k, grid, cfg).value == 0.0);
  }
  const double c0 = 2.5;
  const double s1 = 0.7;
  Eigen::VectorXd k = c.constant(c0);
  k[3] = s1;
  // Grid of N steps over whole periods, both end points included:
  // sum cos^2 = N/2 + 1, sum sin^2 = N/2, sum sin = 0.
  const double n = static_cast<double>(grid.num_steps());
  const double w = c.omega();
  const double expected = cfg.eta1 * s1 * s1 * w * w * (n / 2 + 1) + s1 * s1 * n / 2 + (n + 1) * (c0 - 3.0) * (c0 - 3.0);
  CHECK(evaluate_objective(c, k, grid, cfg).value == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("objective gradient and hessian") {
  FourierControl c;
  c.harmonics = 4;
  const TimeGrid grid(0.0, 2.0 * kSecondsPerDay, 600.0);
  const ObjectiveConfig cfg{1.8914e8, 1.2e9};
  Eigen::VectorXd k = c.constant(1.25e9);
  for (Index i = 1; i < k.size(); ++i) k[i] = 1.0e7 / i;
  const ObjectiveValue j = evaluate_objective(c, k, grid, cfg);
  Eigen::VectorXd fd(k.size());
  for (Index i = 0; i < k.size(); ++i) {
    const double h = 1e3;
    Eigen::VectorXd up = k;
    Eigen::VectorXd dn = k;
    up[i] += h;
    dn[i] -= h;
    fd[i] = (evaluate_objective(c, up, grid, cfg).value - evaluate_objective(c, dn, grid, cfg).value) / (2 * h);
  }
  CHECK(test::relative_error(j.gradient, fd) <= 1e-8);
  const Eigen::VectorXd d = Eigen::VectorXd::LinSpaced(k.size(), -1e6, 2e6);
  const double quad = evaluate_objective(c, k + d, grid, cfg).value;
  CHECK(quad == doctest::Approx(j.value + j.gradient.dot(d) + 0.5 * d.dot(j.hessian * d)).epsilon(1e-12));
}

TEST_CASE("constraint set validation") {
  ConstraintSet s;
  s.p_min = 3.5e5;
  s.p_max = 9.1e5;
  s.spread_limit = 6.0e5;
  CHECK_THROWS_AS(s.validate(), InputError);
  s.spread_limit = 2.5e5;
  s.validate();
  s.relaxation_end = 100.0;
  s.relaxed_cap = 2.0;
  s.feed_in_cap = 1.0;
  CHECK(s.cap_at(50.0) == 2.0);
  CHECK(s.cap_at(100.0) == 1.0);
}

TEST_CASE("unconstrained problem converges to the target level") {
  Fixture f = make_fixture("diamond.json", test::fixture_scenario("scenario_short.json"), 3, CellSpec::per_pipe(4));
  f.problem.constraints = unconstrained();
  const OptimizationReport r = optimize(f.problem, f.problem.control.constant(energy_from_celsius(90.0)));
  CHECK(r.converged);
  CHECK(r.iterations <= 2);
  CHECK(std::abs(r.kappa[0] - f.problem.objective.eta2) <= 1e-6 * energy_per_kelvin());
  CHECK(r.kappa.tail(r.kappa.size() - 1).lpNorm<Eigen::Infinity>() <= 1e-6 * energy_per_kelvin());
}

TEST_CASE("feasible start is returned unchanged") {
  Fixture f = make_fixture("diamond.json", test::fixture_scenario("scenario_short.json"), 2, CellSpec::per_pipe(4));
  f.problem.constraints = unconstrained();
  f.problem.constraints.u_max = energy_from_celsius(110.0);
  const Eigen::VectorXd k0 = f.problem.control.constant(energy_from_celsius(90.0));
  OptimizationReport report;
  const Eigen::VectorXd k = find_feasible(f.problem, k0, {}, &report);
  CHECK(k == k0);
  CHECK(report.phase1_iterations == 0);
}

TEST_CASE("contradictory bounds are infeasible") {
  Fixture f = make_fixture("diamond.json", test::fixture_scenario("scenario_short.json"), 2, CellSpec::per_pipe(4));
  f.problem.constraints.e_min = energy_from_celsius(100.0);
  f.problem.constraints.u_max = energy_from_celsius(95.0);
  CHECK_THROWS_AS(find_feasible(f.problem, f.problem.control.constant(energy_from_celsius(90.0))),
                  InfeasibleError);
}

TEST_CASE("phase one repairs a feed-in violation") {
  ScenarioConfig sc = test::fixture_scenario("scenario_short.json");
  sc.te_s = 2.0 * kSecondsPerDay;
  sc.relaxation_period_s = 0.5 * kSecondsPerDay;
  Fixture f = make_fixture("single_pipe.json", sc, 3, CellSpec::per_meter(0.02));
  const Eigen::VectorXd k0 = f.problem.control.constant(energy_from_celsius(90.0));
  const ConstraintValues before = evaluate_constraints(f.problem.oracle(k0, false), f.problem.constraints);
  REQUIRE(before.max_violation() > 1e-3);
  OptimizationReport report;
  const Eigen::VectorXd k = find_feasible(f.problem, k0, {}, &report);
  CHECK(report.phase1_iterations > 0);
  const ConstraintValues after = evaluate_constraints(f.problem.oracle(k, false), f.problem.constraints);
  CHECK(after.max_violation() <= 1e-6);
}

TEST_CASE("tight feed-in cap leads to pre-heating on a single pipe") {
  ScenarioConfig sc = test::fixture_scenario("scenario_short.json");
  sc.te_s = 2.0 * kSecondsPerDay;
  sc.relaxation_period_s = 0.5 * kSecondsPerDay;
  Fixture f = make_fixture("single_pipe.json", sc, 3, CellSpec::per_meter(0.02));
  const OptimizationReport r = optimize(f.problem, f.problem.control.constant(energy_from_celsius(90.0)));
  CHECK(r.converged);
  CHECK(r.max_violation <= 1e-6);
  // Compare peaks on the second day.
  const TrajectoryRecord& rec = r.trajectory;
  Index first = 0;
  while (rec.times[first] < kSecondsPerDay) ++first;
  const Index n = rec.size() - first;
  Index iu = 0;
  Index ig = 0;
  rec.control.segment(first, n).maxCoeff(&iu);
  const Eigen::VectorXd total = rec.demand.rowwise().sum();
  total.segment(first, n).maxCoeff(&ig);
  const double lead = rec.times[first + ig] - rec.times[first + iu];
  const double delay = f.sys->network.pipes()[0].length * f.sys->network.pipes()[0].area() /
                       rec.total_flow.segment(first, n).mean();
  INFO("lead " << lead << " s, delay " << delay << " s");
  CHECK(lead > 0.0);
  CHECK(lead == doctest::Approx(delay).epsilon(0.5));
}
