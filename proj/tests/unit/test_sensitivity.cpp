#include <doctest.h>

#include "heatnet/control.hpp"
#include "heatnet/sensitivity.hpp"
#include "heatnet/system.hpp"
#include "test_support.hpp"

using namespace heatnet;

namespace {

struct Fixture {
  std::shared_ptr<System> sys;
  OptimizationProblem problem;
};

// Diamond with four cells per pipe (20 cells), one day, K = 2.
Fixture diamond_problem() {
  const ScenarioConfig sc = test::fixture_scenario("scenario_short.json");
  auto sys = std::make_shared<System>(
      build_system(test::fixture_network("diamond.json", false), sc, CellSpec::per_pipe(4)));
  Fixture f{sys, make_problem<FullOrderModel>(*sys, sys->fom, 2)};
  return f;
}

Eigen::VectorXd wavy_kappa(const FourierControl& c) {
  Eigen::VectorXd k = c.constant(energy_from_celsius(92.0));
  for (Index i = 1; i < k.size(); ++i) k[i] = (i % 2 ? 0.01 : -0.006) * k[0] / i;
  return k;
}

}  // namespace

TEST_CASE("objective gradient of a stationary trajectory") {
  const Fixture f = diamond_problem();
  const double c0 = energy_from_celsius(85.0);
  const Eigen::VectorXd kappa = f.problem.control.constant(c0);
  const ObjectiveValue j = evaluate_objective(f.problem.control, kappa, f.problem.grid, f.problem.objective);
  const double n = static_cast<double>(f.problem.grid.size());
  CHECK(j.gradient[0] == doctest::Approx(2.0 * n * (c0 - f.problem.objective.eta2)).epsilon(1e-12));
}

TEST_CASE("feed-in sensitivity at the initial time") {
  const Fixture f = diamond_problem();
  const Eigen::VectorXd kappa = wavy_kappa(f.problem.control);
  const TrajectoryRecord rec = f.problem.oracle(kappa, true);
  // P(t0) = sum G(t0) whatever the parameters: explicit and implicit terms cancel.
  const double explicit_scale = rec.total_flow[0] * rec.dcontrol.row(0).cwiseAbs().maxCoeff();
  CHECK(rec.dfeed_in.row(0).cwiseAbs().maxCoeff() <= 1e-10 * explicit_scale);
  // Sine modes vanish at t0, so the state does not depend on them there.
  const int k = f.problem.control.harmonics;
  for (Index i = 1 + k; i < 1 + 2 * k; ++i) CHECK(rec.doutputs[0].col(i).norm() == 0.0);
}

TEST_CASE("constraint gradients match finite differences") {
  const Fixture f = diamond_problem();
  const Eigen::VectorXd kappa = wavy_kappa(f.problem.control);
  const ConstraintSet& set = f.problem.constraints;
  const ConstraintValues cv = evaluate_constraints(f.problem.oracle(kappa, true), set);
  REQUIRE(cv.jacobian.rows() == cv.g.size());
  Eigen::MatrixXd fd(cv.g.size(), kappa.size());
  for (Index k = 0; k < kappa.size(); ++k) {
    const double h = 1e-5 * kappa[0];
    Eigen::VectorXd up = kappa;
    Eigen::VectorXd dn = kappa;
    up[k] += h;
    dn[k] -= h;
    fd.col(k) = (evaluate_constraints(f.problem.oracle(up, false), set).g -
                 evaluate_constraints(f.problem.oracle(dn, false), set).g) / (2 * h);
  }
  for (ConstraintKind kind : {ConstraintKind::control, ConstraintKind::consumer_energy,
                              ConstraintKind::pressure_spread, ConstraintKind::feed_in}) {
    std::vector<Index> rows;
    for (Index r = 0; r < cv.g.size(); ++r) {
      if (cv.rows[r].kind == kind) rows.push_back(r);
    }
    REQUIRE_FALSE(rows.empty());
    Eigen::MatrixXd a(static_cast<Index>(rows.size()), kappa.size());
    Eigen::MatrixXd b(a.rows(), a.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      a.row(static_cast<Index>(i)) = cv.jacobian.row(rows[i]);
      b.row(static_cast<Index>(i)) = fd.row(rows[i]);
    }
    INFO(constraint_name(kind));
    CHECK(test::relative_error(a, b) <= 1e-4);
  }
}

TEST_CASE("pressure spread picks the extreme consumers") {
  TrajectoryRecord rec;
  rec.times = {0.0, 1.0};
  rec.pressure_differences.resize(2, 3);
  rec.pressure_differences << -1.0, -3.0, -2.0, -5.0, -0.5, -1.0;
  rec.dcontrol = Eigen::MatrixXd::Zero(2, 2);
  for (int t = 0; t < 2; ++t) rec.dpressure.push_back(Eigen::MatrixXd::Identity(3, 2));
  const SpreadSeries s = pressure_spread(rec);
  CHECK(s.value[0] == 2.0);
  CHECK(s.value[1] == 4.5);
  CHECK(s.high[0] == 0);
  CHECK(s.low[0] == 1);
  CHECK(s.high[1] == 1);
  CHECK(s.low[1] == 0);
  CHECK(s.gradient(0, 0) == 1.0);
  CHECK(s.gradient(0, 1) == -1.0);
  const auto flat = flatten_sensitivities(rec.dpressure);
  CHECK(flat.size() == 12);
  CHECK(flat[1].parameter == 1);
}

TEST_CASE("stationary start with the cap at the peak has no initial violation") {
  const Fixture f = diamond_problem();
  ConstraintSet set = f.problem.constraints;
  set.relaxation_end = -1.0;
  set.feed_in_cap = f.sys->stats().maximum;
  const TrajectoryRecord rec = f.problem.oracle(f.problem.control.constant(energy_from_celsius(90.0)), false);
  const ConstraintValues cv = evaluate_constraints(rec, set);
  for (Index r = 0; r < cv.g.size(); ++r) {
    if (cv.rows[r].time == 0) CHECK(cv.g[r] <= 0.0);
  }
}

TEST_CASE("constant control violates the reduced cap whenever demand exceeds it") {
  const Fixture f = diamond_problem();
  const ConstraintSet& set = f.problem.constraints;
  const TrajectoryRecord rec = f.problem.oracle(f.problem.control.constant(energy_from_celsius(90.0)), false);
  const ConstraintValues cv = evaluate_constraints(rec, set);
  for (Index r = 0; r < cv.g.size(); ++r) {
    if (cv.rows[r].kind != ConstraintKind::feed_in) continue;
    const Index t = cv.rows[r].time;
    if (rec.times[t] < set.relaxation_end) continue;
    CHECK((cv.g[r] > 0.0) == (rec.demand.row(t).sum() > set.feed_in_cap * (1 + 1e-12)));
  }
}
