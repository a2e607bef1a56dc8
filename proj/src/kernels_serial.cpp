#include "heatnet/kernels.hpp"

namespace heatnet::kernels::serial {

void accumulate_dense(const Eigen::MatrixXd& stacked_t, const Eigen::VectorXd& gamma, double* out) {
  const Index entries = stacked_t.cols();
  for (Index k = 0; k < entries; ++k) out[k] = stacked_t.col(k).dot(gamma);
}

void accumulate_slots(const SlotMap& map, const Eigen::VectorXd& gamma, double* values) {
  const Index slots = map.num_slots();
  for (Index s = 0; s < slots; ++s) {
    double sum = 0.0;
    for (Index k = map.slot_begin[s]; k < map.slot_begin[s + 1]; ++k) sum += map.coef[k] * gamma[map.term[k]];
    values[s] = sum;
  }
}

void term_products(const Eigen::MatrixXd& stacked_t, Index r, const Eigen::VectorXd& x,
                   Eigen::MatrixXd& out) {
  out.setZero(stacked_t.rows(), r);
  for (Index a = 0; a < r; ++a) {
    for (Index b = 0; b < r; ++b) out.col(a).noalias() += x[b] * stacked_t.col(a + b * r);
  }
}

void for_each_index(Index n, const std::function<void(Index)>& body) {
  for (Index i = 0; i < n; ++i) body(i);
}

}  // namespace heatnet::kernels::serial
