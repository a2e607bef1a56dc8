#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "heatnet/network.hpp"

// Hot loops of the simulator in two flavours: a plain serial reference and an
// OpenMP version. Both visit every output entry with the same summation order,
// so their results agree bitwise.
namespace heatnet::kernels {

// Contributions to the value array of a fixed sparse pattern:
// values[s] = sum over k in [slot_begin[s], slot_begin[s+1]) of coef[k] * gamma[term[k]].
struct SlotMap {
  std::vector<Index> slot_begin;
  std::vector<Index> term;
  std::vector<double> coef;

  Index num_slots() const { return static_cast<Index>(slot_begin.size()) - 1; }
};

enum class Policy { serial, parallel };

namespace serial {

// out = sum_i gamma_i M_i where column k of `stacked_t` holds entry k (column-major)
// of every M_i, i.e. stacked_t(i, k) = vec(M_i)[k].
void accumulate_dense(const Eigen::MatrixXd& stacked_t, const Eigen::VectorXd& gamma, double* out);

void accumulate_slots(const SlotMap& map, const Eigen::VectorXd& gamma, double* values);

// Row i of the result is (M_i x)^T for square r x r matrices M_i stored as in
// accumulate_dense, so the result is n_terms x r.
void term_products(const Eigen::MatrixXd& stacked_t, Index r, const Eigen::VectorXd& x,
                   Eigen::MatrixXd& out);

void for_each_index(Index n, const std::function<void(Index)>& body);

}  // namespace serial

namespace omp {

void accumulate_dense(const Eigen::MatrixXd& stacked_t, const Eigen::VectorXd& gamma, double* out);
void accumulate_slots(const SlotMap& map, const Eigen::VectorXd& gamma, double* values);
void term_products(const Eigen::MatrixXd& stacked_t, Index r, const Eigen::VectorXd& x,
                   Eigen::MatrixXd& out);
// Runs body(i) for i in [0, n) on the OpenMP team. The first exception thrown
// by any iteration is rethrown after the loop.
void for_each_index(Index n, const std::function<void(Index)>& body);

}  // namespace omp

inline void accumulate_dense(Policy p, const Eigen::MatrixXd& stacked_t, const Eigen::VectorXd& gamma,
                             double* out) {
  p == Policy::serial ? serial::accumulate_dense(stacked_t, gamma, out)
                      : omp::accumulate_dense(stacked_t, gamma, out);
}

inline void accumulate_slots(Policy p, const SlotMap& map, const Eigen::VectorXd& gamma, double* values) {
  p == Policy::serial ? serial::accumulate_slots(map, gamma, values)
                      : omp::accumulate_slots(map, gamma, values);
}

inline void term_products(Policy p, const Eigen::MatrixXd& stacked_t, Index r, const Eigen::VectorXd& x,
                          Eigen::MatrixXd& out) {
  p == Policy::serial ? serial::term_products(stacked_t, r, x, out)
                      : omp::term_products(stacked_t, r, x, out);
}

inline void for_each_index(Policy p, Index n, const std::function<void(Index)>& body) {
  p == Policy::serial ? serial::for_each_index(n, body) : omp::for_each_index(n, body);
}

// Caps the OpenMP team size; values < 1 keep the runtime default.
void set_max_threads(int threads);
int max_threads();

}  // namespace heatnet::kernels
