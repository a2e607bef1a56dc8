#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "heatnet/network.hpp"

namespace heatnet {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// Volume flows below this magnitude (m^3/s) carry no transport.
inline constexpr double kZeroFlow = 1.0e-12;

// Finite-volume cells along every pipe. Cell j of pipe p is numbered from the
// pipe's `from` end; all cells of one pipe share the same length.
struct Discretization {
  std::vector<Index> cells;         // per pipe
  std::vector<Index> offset;        // first global cell index per pipe
  std::vector<double> cell_length;  // per pipe, m
  std::vector<double> cell_volume;  // per pipe, m^3
  std::vector<Index> from_node;
  std::vector<Index> to_node;
  Index size = 0;

  static Discretization uniform(const Network& net, Index cells_per_pipe);
  // About `cells_per_meter * length` cells per pipe, at least one.
  static Discretization per_meter(const Network& net, double cells_per_meter);
  static Discretization from_counts(const Network& net, std::vector<Index> counts);

  Index num_pipes() const { return static_cast<Index>(cells.size()); }
  Index cell(Index pipe, Index j) const { return offset[pipe] + j; }
  // Cell of `pipe` adjacent to `node` (which must be one of its ends).
  Index end_cell(Index pipe, Index node) const;
  // Volume of every cell; the diagonal of the energy matrix Q.
  Eigen::VectorXd volumes() const;
};

// Flow direction per pipe: +1 along the reference direction, -1 against, 0 at rest.
using FlowSigns = std::vector<std::int8_t>;

FlowSigns flow_signs(const Eigen::VectorXd& q);

enum class TermKind : std::uint8_t {
  advection,  // transport along one pipe in one direction
  mixing,     // inflow pipe `upstream` feeding outflow pipe `pipe` at `node`
  source,     // control input entering `pipe` at the source node
};

struct FluxTerm {
  TermKind kind = TermKind::advection;
  Index pipe = -1;
  int sign = 1;  // direction of `pipe`
  Index node = -1;
  Index upstream = -1;
};

// Upwind transport operator written as sum_i gamma_i(q) (A_i e + B_i u) with
// constant sparse A_i, B_i. Terms are generated for every flow direction and
// node coupling that occurred in the trained sign patterns.
class TransportLibrary {
 public:
  TransportLibrary(const Network& net, Discretization disc, const std::vector<FlowSigns>& trained);

  const Discretization& discretization() const { return disc_; }
  Index state_size() const { return disc_.size; }
  Index num_terms() const { return static_cast<Index>(terms_.size()); }
  Index num_pipes() const { return disc_.num_pipes(); }
  const std::vector<FluxTerm>& terms() const { return terms_; }

  const std::vector<Triplet>& a_entries(Index term) const { return a_entries_[term]; }
  // (row, coefficient) of B_i; empty for terms without input.
  const std::vector<std::pair<Index, double>>& b_entries(Index term) const { return b_entries_[term]; }

  SparseMatrix a_matrix(Index term) const;
  Eigen::VectorXd b_vector(Index term) const;

  // Weights for pipe flows q (m^3/s) and source inflow q_s. Throws
  // NumericalError naming the pipe if the flow uses an untrained direction.
  Eigen::VectorXd weights(const Eigen::VectorXd& q, double q_source) const;
  // d gamma / d (q, q_s): terms x (pipes + 1), last column for q_s.
  Eigen::MatrixXd weight_derivative(const Eigen::VectorXd& q, double q_source) const;

  // sum_i gamma_i A_i and sum_i gamma_i B_i.
  SparseMatrix assemble_a(const Eigen::VectorXd& gamma) const;
  Eigen::VectorXd assemble_b(const Eigen::VectorXd& gamma) const;
  // sum_i gamma_i (A_i e + B_i u).
  Eigen::VectorXd apply(const Eigen::VectorXd& gamma, const Eigen::VectorXd& e, double u) const;
  // Column i holds A_i e + B_i u.
  SparseMatrix term_columns(const Eigen::VectorXd& e, double u) const;

  bool covers(const FlowSigns& signs) const;

 private:
  // Inflow sum at every node and the pipes feeding it, for the current flow.
  void node_inflows(const Eigen::VectorXd& q, double q_source, std::vector<double>& inflow) const;
  void check_coverage(const Eigen::VectorXd& q, double q_source) const;

  Discretization disc_;
  Index source_ = -1;
  std::vector<std::string> pipe_ids_;
  std::vector<std::vector<Index>> incident_;
  std::vector<FluxTerm> terms_;
  std::vector<std::vector<Triplet>> a_entries_;
  std::vector<std::vector<std::pair<Index, double>>> b_entries_;
  // Term lookup for coverage checks.
  std::vector<Index> advection_term_[2];  // [sign > 0][pipe]
  std::vector<std::vector<std::pair<Index, Index>>> mixing_lookup_;  // per node: (upstream, pipe)
  std::vector<Index> source_term_;  // per pipe
};

// Direct upwind assembly for one flow field, independent of the library.
struct UpwindOperator {
  SparseMatrix a;
  Eigen::VectorXd b;
};

UpwindOperator assemble_upwind(const Network& net, const Discretization& disc,
                               const Eigen::VectorXd& q, double q_source);

// Flow-weighted mix of the inflowing energy densities at every node. Nodes
// without inflow report `idle`.
Eigen::VectorXd mixed_node_values(const Network& net, const Discretization& disc,
                                  const Eigen::VectorXd& q, double q_source,
                                  const Eigen::VectorXd& e, double u, double idle = 0.0);

// Selects, for each consumer, the cell of its feed pipe next to the consumer node.
SparseMatrix output_map(const Network& net, const Discretization& disc);

// Default training pattern: every pipe along its reference direction.
FlowSigns forward_signs(const Network& net);

}  // namespace heatnet
