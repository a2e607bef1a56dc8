#include "heatnet/models.hpp"

#include <algorithm>
#include <sstream>

#include "heatnet/errors.hpp"

namespace heatnet {

FlowCoupling::FlowCoupling(HydraulicModel hydraulics, std::shared_ptr<const TransportLibrary> library,
                           double return_energy, double energy_floor)
    : hydraulics_(std::move(hydraulics)),
      library_(std::move(library)),
      return_energy_(return_energy),
      energy_floor_(energy_floor) {
  if (library_->num_pipes() != hydraulics_.network().num_pipes()) {
    throw InputError("transport library and hydraulic model describe different networks");
  }
}

CouplingState FlowCoupling::evaluate(const Eigen::VectorXd& y, const ConsumerLoad& load,
                                     bool derivatives, const Eigen::VectorXd* chord_guess) const {
  const Index nc = hydraulics_.network().num_consumers();
  CouplingState s;
  if (load.prescribed) {
    s.consumer_flow = load.flows;
    if (derivatives) s.dflow_dy = Eigen::VectorXd::Zero(nc);
  } else {
    s.consumer_flow = consumer_flows(load.demand, y, return_energy_, energy_floor_);
    if (derivatives) {
      s.dflow_dy.resize(nc);
      for (Index c = 0; c < nc; ++c) s.dflow_dy[c] = -s.consumer_flow[c] / (y[c] - return_energy_);
    }
  }
  s.flow = hydraulics_.solve_loop_flows(s.consumer_flow, chord_guess);
  s.gamma = library_->weights(s.flow.q, s.flow.q_source);
  if (derivatives) {
    s.dq_dqc = hydraulics_.flow_derivative(s.flow);
    const Index np = s.dq_dqc.rows();
    Eigen::MatrixXd dw(np + 1, nc);
    dw.topRows(np) = s.dq_dqc * s.dflow_dy.asDiagonal();
    dw.row(np) = s.dflow_dy.transpose();
    s.dgamma_dy = library_->weight_derivative(s.flow.q, s.flow.q_source) * dw;
  }
  return s;
}

Eigen::MatrixXd FlowCoupling::pressure_sensitivity(const CouplingState& s) const {
  return hydraulics_.pressure_derivative(s.flow) * s.dq_dqc * s.dflow_dy.asDiagonal();
}

namespace {

Index find_slot(const SparseMatrix& m, Index row, Index col) {
  const auto* outer = m.outerIndexPtr();
  const auto* inner = m.innerIndexPtr();
  const auto* begin = inner + outer[col];
  const auto* end = inner + outer[col + 1];
  const auto* it = std::lower_bound(begin, end, static_cast<int>(row));
  if (it == end || *it != row) throw std::logic_error("entry missing from Jacobian pattern");
  return it - inner;
}

}  // namespace

FullOrderModel::FullOrderModel(std::shared_ptr<const TransportLibrary> library, SparseMatrix output,
                               kernels::Policy policy)
    : library_(std::move(library)), output_(std::move(output)), policy_(policy) {
  const Index n = dim();
  const Index nc = output_.rows();
  if (output_.cols() != n) throw InputError("output map does not match the state dimension");

  output_cell_.assign(nc, -1);
  for (Index k = 0; k < output_.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(output_, k); it; ++it) output_cell_[it.row()] = it.col();
  }

  std::vector<Triplet> entries;
  for (Index i = 0; i < library_->num_terms(); ++i) {
    for (const Triplet& t : library_->a_entries(i)) entries.emplace_back(t.row(), t.col(), 1.0);
  }
  for (Index r = 0; r < n; ++r) {
    entries.emplace_back(r, r, 1.0);
    for (Index c = 0; c < nc; ++c) entries.emplace_back(r, output_cell_[c], 1.0);
  }
  pattern_.resize(n, n);
  pattern_.setFromTriplets(entries.begin(), entries.end());
  pattern_.makeCompressed();

  const Index slots = pattern_.nonZeros();
  std::vector<std::vector<std::pair<Index, double>>> per_slot(slots);
  for (Index i = 0; i < library_->num_terms(); ++i) {
    for (const Triplet& t : library_->a_entries(i)) {
      per_slot[find_slot(pattern_, t.row(), t.col())].emplace_back(i, t.value());
    }
  }
  a_slots_.slot_begin.assign(1, 0);
  for (const auto& list : per_slot) {
    for (auto [term, c] : list) {
      a_slots_.term.push_back(term);
      a_slots_.coef.push_back(c);
    }
    a_slots_.slot_begin.push_back(static_cast<Index>(a_slots_.term.size()));
  }
  diagonal_slot_.resize(n);
  feedback_slot_.resize(n * nc);
  for (Index r = 0; r < n; ++r) {
    diagonal_slot_[r] = find_slot(pattern_, r, r);
    for (Index c = 0; c < nc; ++c) feedback_slot_[r * nc + c] = find_slot(pattern_, r, output_cell_[c]);
  }
}

FullOrderModel::Workspace FullOrderModel::workspace() const {
  Workspace ws;
  ws.jacobian = pattern_;
  ws.step = pattern_;
  return ws;
}

Eigen::VectorXd FullOrderModel::rhs(const Eigen::VectorXd& gamma, const Eigen::VectorXd& x, double u) const {
  return library_->apply(gamma, x, u);
}

Eigen::VectorXd FullOrderModel::rhs(Workspace& ws, const Eigen::VectorXd& gamma, const Eigen::VectorXd& x,
                                    double u) const {
  ws.gamma = gamma;
  return library_->apply(gamma, x, u);
}

Eigen::VectorXd FullOrderModel::input_vector(const Eigen::VectorXd& gamma) const {
  return library_->assemble_b(gamma);
}

void FullOrderModel::jacobian(Workspace& ws, const Eigen::MatrixXd& dgamma_dy, const Eigen::VectorXd& x,
                              double u) const {
  double* values = ws.jacobian.valuePtr();
  kernels::accumulate_slots(policy_, a_slots_, ws.gamma, values);
  if (dgamma_dy.size() == 0) return;
  const Index nc = num_outputs();
  for (Index i = 0; i < library_->num_terms(); ++i) {
    const auto d = dgamma_dy.row(i);
    if (d.isZero(0.0)) continue;
    for (const Triplet& t : library_->a_entries(i)) {
      const double col_value = t.value() * x[t.col()];
      const Index base = t.row() * nc;
      for (Index c = 0; c < nc; ++c) values[feedback_slot_[base + c]] += col_value * d[c];
    }
    for (auto [row, coef] : library_->b_entries(i)) {
      const double col_value = coef * u;
      const Index base = row * nc;
      for (Index c = 0; c < nc; ++c) values[feedback_slot_[base + c]] += col_value * d[c];
    }
  }
}

void FullOrderModel::factor_step(Workspace& ws, double h) const {
  const Index nnz = ws.jacobian.nonZeros();
  const double* j = ws.jacobian.valuePtr();
  double* m = ws.step.valuePtr();
  for (Index k = 0; k < nnz; ++k) m[k] = -h * j[k];
  for (Index slot : diagonal_slot_) m[slot] += 1.0;
  if (!ws.analyzed) {
    ws.lu->analyzePattern(ws.step);
    ws.analyzed = true;
  }
  ws.lu->factorize(ws.step);
  if (ws.lu->info() != Eigen::Success) {
    throw NumericalError("sparse LU of the step matrix failed: " + ws.lu->lastErrorMessage());
  }
}

Eigen::MatrixXd FullOrderModel::solve(Workspace& ws, const Eigen::MatrixXd& rhs) const {
  Eigen::MatrixXd out = ws.lu->solve(rhs);
  return out;
}

Index FullOrderModel::jacobian_nonzeros(const Workspace& ws) const {
  const double* v = ws.jacobian.valuePtr();
  return std::count_if(v, v + ws.jacobian.nonZeros(), [](double x) { return x != 0.0; });
}

ReducedOrderModel::ReducedOrderModel(std::shared_ptr<const TransportLibrary> library, Eigen::MatrixXd v,
                                     const Eigen::VectorXd& energy_diag, const SparseMatrix& output,
                                     kernels::Policy policy)
    : library_(std::move(library)), basis_(std::move(v)), policy_(policy) {
  const Index n = library_->state_size();
  if (basis_.rows() != n || energy_diag.size() != n || output.cols() != n) {
    throw InputError("reduced model: basis, energy matrix and output map must match the state size");
  }
  const Index r = basis_.cols();
  const Index nt = library_->num_terms();
  const Eigen::MatrixXd w = energy_diag.asDiagonal() * basis_;
  stacked_a_t_.resize(nt, r * r);
  reduced_b_.resize(r, nt);
  for (Index i = 0; i < nt; ++i) {
    // Only the rows touched by A_i contribute to W^T A_i V.
    Eigen::MatrixXd ar = Eigen::MatrixXd::Zero(r, r);
    for (const Triplet& t : library_->a_entries(i)) {
      ar.noalias() += t.value() * w.row(t.row()).transpose() * basis_.row(t.col());
    }
    stacked_a_t_.row(i) = Eigen::Map<const Eigen::RowVectorXd>(ar.data(), r * r);
    Eigen::VectorXd br = Eigen::VectorXd::Zero(r);
    for (auto [row, c] : library_->b_entries(i)) br += c * w.row(row).transpose();
    reduced_b_.col(i) = br;
  }
  reduced_c_ = output * basis_;
  constant_coordinates_ = w.transpose() * Eigen::VectorXd::Ones(n);
}

ReducedOrderModel::ReducedOrderModel(std::shared_ptr<const TransportLibrary> library, Eigen::MatrixXd v,
                                     Eigen::MatrixXd stacked_a_t, Eigen::MatrixXd reduced_b,
                                     Eigen::MatrixXd reduced_c, Eigen::VectorXd constant_coordinates,
                                     kernels::Policy policy)
    : library_(std::move(library)),
      basis_(std::move(v)),
      stacked_a_t_(std::move(stacked_a_t)),
      reduced_b_(std::move(reduced_b)),
      reduced_c_(std::move(reduced_c)),
      constant_coordinates_(std::move(constant_coordinates)),
      policy_(policy) {
  const Index r = basis_.cols();
  const Index nt = library_->num_terms();
  if (basis_.rows() != library_->state_size() || stacked_a_t_.rows() != nt || stacked_a_t_.cols() != r * r ||
      reduced_b_.rows() != r || reduced_b_.cols() != nt || reduced_c_.cols() != r ||
      constant_coordinates_.size() != r) {
    throw InputError("reduced model operators have inconsistent dimensions");
  }
}

ReducedOrderModel::Workspace ReducedOrderModel::workspace() const {
  Workspace ws;
  ws.reduced_a.resize(dim(), dim());
  ws.jacobian.resize(dim(), dim());
  return ws;
}

Eigen::MatrixXd ReducedOrderModel::reduced_a(const Eigen::VectorXd& gamma) const {
  Eigen::MatrixXd a(dim(), dim());
  kernels::accumulate_dense(policy_, stacked_a_t_, gamma, a.data());
  return a;
}

Eigen::VectorXd ReducedOrderModel::rhs(const Eigen::VectorXd& gamma, const Eigen::VectorXd& x,
                                       double u) const {
  return reduced_a(gamma) * x + reduced_b_ * (gamma * u);
}

Eigen::VectorXd ReducedOrderModel::rhs(Workspace& ws, const Eigen::VectorXd& gamma, const Eigen::VectorXd& x,
                                       double u) const {
  kernels::accumulate_dense(policy_, stacked_a_t_, gamma, ws.reduced_a.data());
  return ws.reduced_a * x + reduced_b_ * (gamma * u);
}

void ReducedOrderModel::jacobian(Workspace& ws, const Eigen::MatrixXd& dgamma_dy, const Eigen::VectorXd& x,
                                 double u) const {
  ws.jacobian = ws.reduced_a;
  if (dgamma_dy.size() == 0) return;
  kernels::term_products(policy_, stacked_a_t_, dim(), x, ws.products);
  // Column i of T is A_ri x + B_ri u.
  const Eigen::MatrixXd t = ws.products.transpose() + u * reduced_b_;
  ws.jacobian.noalias() += t * (dgamma_dy * reduced_c_);
}

void ReducedOrderModel::factor_step(Workspace& ws, double h) const {
  Eigen::MatrixXd m = -h * ws.jacobian;
  m.diagonal().array() += 1.0;
  ws.lu.compute(m);
}

Index ReducedOrderModel::jacobian_nonzeros(const Workspace& ws) const {
  return (ws.jacobian.array() != 0.0).count();
}

}  // namespace heatnet
