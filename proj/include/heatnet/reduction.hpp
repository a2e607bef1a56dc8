#pragma once

#include <complex>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "heatnet/dae.hpp"
#include "heatnet/kernels.hpp"
#include "heatnet/models.hpp"
#include "heatnet/transport.hpp"

namespace heatnet {

// A frozen flow field at which the transport system is linear time-invariant.
struct FrozenFlow {
  Eigen::VectorXd q;  // per pipe, m^3/s
  double q_source = 0.0;
};

struct ReductionConfig {
  double tolerance = 1.0e-3;                // relative transfer-function error
  std::vector<double> shifts;               // rad/s, interpolation points i*omega
  std::vector<double> error_frequencies;    // rad/s, certification grid
  // Pool for adaptive refinement: when the worst candidate was already
  // enriched at every shift, the pool frequencies with the largest error for
  // that candidate become new shifts.
  std::vector<double> refinement_frequencies;
  int refinement_per_step = 4;
  double truncation = 1.0e-10;              // relative singular value cut
  int max_iterations = 40;
  Index max_dimension = -1;                 // no cap when negative
  bool include_constant = true;             // start from the uniform state
  kernels::Policy policy = kernels::Policy::parallel;

  // Shifts: 8 log-spaced points on [2 pi / 1 day, pi / dt]; error grid: 24;
  // refinement pool: 64.
  static ReductionConfig defaults(double dt);
};

std::vector<double> log_spaced(double lo, double hi, int count);

using TransferSamples = std::vector<Eigen::VectorXcd>;  // per frequency: outputs

TransferSamples full_transfer(const TransportLibrary& library, const SparseMatrix& output,
                              const FrozenFlow& flow, const std::vector<double>& frequencies);
TransferSamples reduced_transfer(const ReducedOrderModel& rom, const FrozenFlow& flow,
                                 const std::vector<double>& frequencies);

// sqrt(sum_j |H_full - H_red|_F^2) / sqrt(sum_j |H_full|_F^2); 1 for an empty model.
double transfer_error(const TransferSamples& full, const TransferSamples& reduced);

// Real and imaginary parts of (i w_j I - A)^{-1} B for every shift.
Eigen::MatrixXd local_basis(const TransportLibrary& library, const FrozenFlow& flow,
                            const std::vector<double>& shifts);

// Extends a Q-orthonormal basis by the directions of `added` not already in
// its span, truncating singular values below `truncation` times the largest.
Eigen::MatrixXd merge_basis(const Eigen::MatrixXd& basis, const Eigen::MatrixXd& added,
                            const Eigen::VectorXd& energy_diag, double truncation);

// Largest real part of the eigenvalues of A_r at a frozen flow.
double reduced_spectral_abscissa(const ReducedOrderModel& rom, const FrozenFlow& flow);

struct GreedyStep {
  int iteration = 0;
  Index picked = -1;          // candidate index used for enrichment
  double max_error = 0.0;     // largest candidate error before enrichment
  Index dimension = 0;        // basis size after enrichment
  std::vector<double> shifts; // frequencies used for this enrichment, rad/s
};

struct ReductionResult {
  std::shared_ptr<ReducedOrderModel> model;  // null when the tolerance was not reached
  std::vector<Index> selected;               // picked candidates in order
  std::vector<double> errors;                // final error per candidate
  std::vector<GreedyStep> log;
  bool converged = false;
};

// Greedy selection of linearizations: enrich at the worst candidate until all
// candidate transfer errors fall below the tolerance.
ReductionResult greedy_reduce(std::shared_ptr<const TransportLibrary> library, const SparseMatrix& output,
                              const Eigen::VectorXd& energy_diag, const std::vector<FrozenFlow>& candidates,
                              const ReductionConfig& config);

// Flow fields of a trajectory recorded with `record_flows`, every `stride` grid points.
std::vector<FrozenFlow> candidates_from_trajectory(const TrajectoryRecord& rec, Index stride);

// Sign patterns of a set of flows (for training the transport library).
std::vector<FlowSigns> signs_of(const std::vector<FrozenFlow>& flows);

}  // namespace heatnet
