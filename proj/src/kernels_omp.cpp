#include <omp.h>

#include <exception>
#include <mutex>

#include "heatnet/kernels.hpp"

namespace heatnet::kernels {

namespace omp {

void accumulate_dense(const Eigen::MatrixXd& stacked_t, const Eigen::VectorXd& gamma, double* out) {
  const Index entries = stacked_t.cols();
#pragma omp parallel for schedule(static)
  for (Index k = 0; k < entries; ++k) out[k] = stacked_t.col(k).dot(gamma);
}

void accumulate_slots(const SlotMap& map, const Eigen::VectorXd& gamma, double* values) {
  const Index slots = map.num_slots();
#pragma omp parallel for schedule(static)
  for (Index s = 0; s < slots; ++s) {
    double sum = 0.0;
    for (Index k = map.slot_begin[s]; k < map.slot_begin[s + 1]; ++k) sum += map.coef[k] * gamma[map.term[k]];
    values[s] = sum;
  }
}

void term_products(const Eigen::MatrixXd& stacked_t, Index r, const Eigen::VectorXd& x,
                   Eigen::MatrixXd& out) {
  out.setZero(stacked_t.rows(), r);
#pragma omp parallel for schedule(static)
  for (Index a = 0; a < r; ++a) {
    for (Index b = 0; b < r; ++b) out.col(a).noalias() += x[b] * stacked_t.col(a + b * r);
  }
}

void for_each_index(Index n, const std::function<void(Index)>& body) {
  std::exception_ptr failure;
  std::mutex guard;
#pragma omp parallel for schedule(dynamic, 1)
  for (Index i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(guard);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace omp

void set_max_threads(int threads) {
  if (threads >= 1) omp_set_num_threads(threads);
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace heatnet::kernels
