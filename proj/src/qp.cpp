#include "heatnet/qp.hpp"

#include <cmath>
#include <limits>

#include "heatnet/errors.hpp"

namespace heatnet {

namespace {

struct ActiveFactor {
  Eigen::MatrixXd j;  // L^{-T} Q
  Eigen::MatrixXd r;  // q x q upper triangular
};

ActiveFactor factor_active(const Eigen::MatrixXd& l_inv, const Eigen::MatrixXd& normals,
                           const std::vector<Index>& active) {
  const Index n = l_inv.rows();
  const Index q = static_cast<Index>(active.size());
  ActiveFactor f;
  if (q == 0) {
    f.j = l_inv.transpose();
    f.r.resize(0, 0);
    return f;
  }
  Eigen::MatrixXd m(n, q);
  for (Index k = 0; k < q; ++k) m.col(k) = l_inv * normals.row(active[k]).transpose();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  const Eigen::MatrixXd qmat = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  f.r = qr.matrixQR().topRows(q).triangularView<Eigen::Upper>();
  f.j = l_inv.transpose() * qmat;
  return f;
}

}  // namespace

QpResult solve_qp(const Eigen::MatrixXd& hessian, const Eigen::VectorXd& gradient,
                  const Eigen::MatrixXd& normals, const Eigen::VectorXd& bounds, int max_iterations) {
  const Index n = hessian.rows();
  const Index m = normals.rows();
  if (hessian.cols() != n || gradient.size() != n || normals.cols() != n || bounds.size() != m) {
    throw InputError("solve_qp: inconsistent dimensions");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(hessian);
  if (llt.info() != Eigen::Success) throw NumericalError("solve_qp: Hessian is not positive definite");
  const Eigen::MatrixXd l = llt.matrixL();
  const Eigen::MatrixXd l_inv = l.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(n, n));

  QpResult res;
  res.x = -llt.solve(gradient);
  res.multipliers = Eigen::VectorXd::Zero(m);
  std::vector<Index> active;
  std::vector<double> u;
  std::vector<bool> in_active(m, false);
  const double eps = 1.0e3 * std::numeric_limits<double>::epsilon();

  Eigen::VectorXd row_norm(m);
  for (Index i = 0; i < m; ++i) row_norm[i] = normals.row(i).norm();

  for (res.iterations = 0; res.iterations < max_iterations; ++res.iterations) {
    const Eigen::VectorXd s = normals * res.x - bounds;
    Index p = -1;
    double worst = 0.0;
    const double xnorm = res.x.lpNorm<Eigen::Infinity>();
    for (Index i = 0; i < m; ++i) {
      if (in_active[i]) continue;
      const double tol = 1.0e-11 * (1.0 + std::abs(bounds[i]) + row_norm[i] * xnorm);
      if (s[i] < -tol && s[i] / std::max(row_norm[i], 1e-300) < worst) {
        worst = s[i] / std::max(row_norm[i], 1e-300);
        p = i;
      }
    }
    if (p < 0) {
      res.feasible = true;
      break;
    }
    const Eigen::VectorXd np = normals.row(p).transpose();
    double sp = s[p];
    double u_plus = 0.0;
    bool added = false;
    for (int inner = 0; inner <= n + 1 && !added; ++inner) {
      const ActiveFactor f = factor_active(l_inv, normals, active);
      const Index q = static_cast<Index>(active.size());
      const Eigen::VectorXd d = f.j.transpose() * np;
      const Eigen::VectorXd z = f.j.rightCols(n - q) * d.tail(n - q);
      Eigen::VectorXd r(q);
      if (q > 0) r = f.r.triangularView<Eigen::Upper>().solve(d.head(q));

      double t1 = std::numeric_limits<double>::infinity();
      Index k = -1;
      for (Index j = 0; j < q; ++j) {
        if (r[j] > eps) {
          const double ratio = u[j] / r[j];
          if (ratio < t1) {
            t1 = ratio;
            k = j;
          }
        }
      }
      const double zn = z.dot(np);
      const double t2 = (z.norm() > eps * std::max(1.0, np.norm()) && zn > 0.0)
                            ? -sp / zn
                            : std::numeric_limits<double>::infinity();
      const double t = std::min(t1, t2);
      if (!std::isfinite(t)) {
        // Constraint p cannot be satisfied together with the active set.
        res.feasible = false;
        res.active = active;
        return res;
      }
      for (Index j = 0; j < q; ++j) u[j] -= t * r[j];
      u_plus += t;
      if (std::isfinite(t2)) res.x += t * z;
      if (t2 <= t1) {
        active.push_back(p);
        u.push_back(u_plus);
        in_active[p] = true;
        added = true;
      } else {
        in_active[active[k]] = false;
        active.erase(active.begin() + k);
        u.erase(u.begin() + k);
        sp = np.dot(res.x) - bounds[p];
        if (sp >= 0.0) added = true;  // satisfied after the partial step
      }
    }
  }
  for (std::size_t k = 0; k < active.size(); ++k) res.multipliers[active[k]] = std::max(u[k], 0.0);
  res.active = active;
  return res;
}

}  // namespace heatnet
