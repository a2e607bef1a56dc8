#include <doctest.h>

#include <limits>
#include <random>

#include "heatnet/errors.hpp"
#include "heatnet/qp.hpp"
#include "test_support.hpp"

using namespace heatnet;

namespace {

// Minimum over all active sets of the equality-constrained problem, keeping
// only primal feasible points: exhaustive reference for small problems.
double brute_force_qp(const Eigen::MatrixXd& h, const Eigen::VectorXd& g, const Eigen::MatrixXd& n,
                      const Eigen::VectorXd& b, Eigen::VectorXd& best_x) {
  const Index dim = h.rows();
  const Index m = n.rows();
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
    std::vector<Index> act;
    for (Index i = 0; i < m; ++i) {
      if (mask >> i & 1) act.push_back(i);
    }
    const Index k = static_cast<Index>(act.size());
    if (k > dim) continue;
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(dim + k, dim + k);
    Eigen::VectorXd rhs(dim + k);
    kkt.topLeftCorner(dim, dim) = h;
    rhs.head(dim) = -g;
    for (Index j = 0; j < k; ++j) {
      kkt.block(dim + j, 0, 1, dim) = n.row(act[j]);
      kkt.block(0, dim + j, dim, 1) = n.row(act[j]).transpose();
      rhs[dim + j] = b[act[j]];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible()) continue;
    const Eigen::VectorXd x = lu.solve(rhs).head(dim);
    if (((n * x - b).array() < -1e-9).any()) continue;
    const double f = 0.5 * x.dot(h * x) + g.dot(x);
    if (f < best) {
      best = f;
      best_x = x;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("unconstrained minimizer") {
  Eigen::MatrixXd h(2, 2);
  h << 4, 1, 1, 3;
  Eigen::VectorXd g(2);
  g << 1, -2;
  const QpResult r = solve_qp(h, g, Eigen::MatrixXd(0, 2), Eigen::VectorXd(0));
  CHECK(r.feasible);
  CHECK((h * r.x + g).norm() <= 1e-14);
}

TEST_CASE("random problems satisfy KKT and match the exhaustive oracle") {
  auto gen = test::rng(12);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 60; ++trial) {
    const Index dim = 2 + trial % 4;
    const Index m = 3 + trial % 6;
    Eigen::MatrixXd a(dim, dim);
    for (Index i = 0; i < a.size(); ++i) a.data()[i] = nd(gen);
    const Eigen::MatrixXd h = a * a.transpose() + 0.5 * Eigen::MatrixXd::Identity(dim, dim);
    Eigen::VectorXd g(dim);
    Eigen::MatrixXd n(m, dim);
    Eigen::VectorXd b(m);
    for (Index i = 0; i < dim; ++i) g[i] = 3.0 * nd(gen);
    for (Index i = 0; i < n.size(); ++i) n.data()[i] = nd(gen);
    // Feasible by construction: b below the constraint values at a random point.
    Eigen::VectorXd x0(dim);
    for (Index i = 0; i < dim; ++i) x0[i] = nd(gen);
    for (Index i = 0; i < m; ++i) b[i] = n.row(i).dot(x0) - std::abs(nd(gen));

    const QpResult r = solve_qp(h, g, n, b);
    REQUIRE(r.feasible);
    const Eigen::VectorXd slack = n * r.x - b;
    CHECK(slack.minCoeff() >= -1e-9);
    CHECK(r.multipliers.minCoeff() >= 0.0);
    CHECK((h * r.x + g - n.transpose() * r.multipliers).norm() <= 1e-8 * (1 + g.norm()));
    CHECK(std::abs(r.multipliers.dot(slack)) <= 1e-8 * (1 + r.multipliers.norm()));

    Eigen::VectorXd xb;
    const double fb = brute_force_qp(h, g, n, b, xb);
    const double f = 0.5 * r.x.dot(h * r.x) + g.dot(r.x);
    CHECK(f == doctest::Approx(fb).epsilon(1e-9));
    CHECK((r.x - xb).norm() <= 1e-7 * (1 + xb.norm()));
  }
}

TEST_CASE("infeasible constraints are reported") {
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(1, 1);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(1);
  Eigen::MatrixXd n(2, 1);
  n << 1, -1;
  Eigen::VectorXd b(2);
  b << 1, 0;  // x >= 1 and x <= 0
  CHECK_FALSE(solve_qp(h, g, n, b).feasible);
}

TEST_CASE("indefinite hessian is rejected") {
  Eigen::MatrixXd h(2, 2);
  h << 1, 0, 0, -1;
  CHECK_THROWS_AS(solve_qp(h, Eigen::VectorXd::Zero(2), Eigen::MatrixXd(0, 2), Eigen::VectorXd(0)), NumericalError);
  CHECK_THROWS_AS(solve_qp(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(3), Eigen::MatrixXd(0, 2),
                           Eigen::VectorXd(0)),
                  InputError);
}
