#pragma once

#include <vector>

#include <Eigen/Dense>

#include "heatnet/network.hpp"

namespace heatnet {

struct QpResult {
  Eigen::VectorXd x;
  Eigen::VectorXd multipliers;  // one per inequality row, zero when inactive
  std::vector<Index> active;
  bool feasible = false;
  int iterations = 0;
};

// Strictly convex QP  min 1/2 x^T H x + g^T x  s.t.  N x >= b  (row-wise),
// solved by the dual active-set method of Goldfarb and Idnani. The
// factorization of the active normals is rebuilt after every change, which is
// cheap for the small variable counts used here.
QpResult solve_qp(const Eigen::MatrixXd& hessian, const Eigen::VectorXd& gradient,
                  const Eigen::MatrixXd& normals, const Eigen::VectorXd& bounds, int max_iterations = 2000);

}  // namespace heatnet
