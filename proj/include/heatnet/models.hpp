#pragma once

#include <memory>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "heatnet/hydraulics.hpp"
#include "heatnet/kernels.hpp"
#include "heatnet/transport.hpp"

namespace heatnet {

// Consumer side of the algebraic equations at one instant: either the heat
// demand G (flows follow from the consumer energies) or prescribed flows
// (frozen hydraulics, used for tests and linearizations).
struct ConsumerLoad {
  Eigen::VectorXd demand;  // W
  Eigen::VectorXd flows;   // m^3/s, used when `prescribed`
  bool prescribed = false;
};

struct CouplingState {
  Eigen::VectorXd consumer_flow;  // q_c
  FlowField flow;
  Eigen::VectorXd gamma;
  // Filled when derivatives are requested.
  Eigen::VectorXd dflow_dy;     // d q_c / d y_c (diagonal)
  Eigen::MatrixXd dq_dqc;       // pipes x consumers
  Eigen::MatrixXd dgamma_dy;    // terms x consumers
};

// Algebraic part of the DAE: consumer energies y -> consumer flows -> loop
// solve -> transport weights, with derivatives by the chain rule.
class FlowCoupling {
 public:
  FlowCoupling(HydraulicModel hydraulics, std::shared_ptr<const TransportLibrary> library,
               double return_energy, double energy_floor);

  const HydraulicModel& hydraulics() const { return hydraulics_; }
  const TransportLibrary& library() const { return *library_; }
  std::shared_ptr<const TransportLibrary> library_ptr() const { return library_; }
  double return_energy() const { return return_energy_; }
  double energy_floor() const { return energy_floor_; }

  CouplingState evaluate(const Eigen::VectorXd& y, const ConsumerLoad& load, bool derivatives,
                         const Eigen::VectorXd* chord_guess = nullptr) const;

  // Feed-in power (u - e_R) sum q_c.
  double feed_in(const CouplingState& s, double u) const {
    return (u - return_energy_) * s.consumer_flow.sum();
  }
  // d(pressure differences) / d y, consumers x consumers.
  Eigen::MatrixXd pressure_sensitivity(const CouplingState& s) const;

 private:
  HydraulicModel hydraulics_;
  std::shared_ptr<const TransportLibrary> library_;
  double return_energy_;
  double energy_floor_;
};

// Sparse full-order transport model e' = sum gamma_i (A_i e + B_i u), y = C e.
class FullOrderModel {
 public:
  using Matrix = SparseMatrix;

  struct Workspace {
    SparseMatrix jacobian;  // fixed pattern, values overwritten
    SparseMatrix step;      // I - h J on the same pattern
    // SparseLU is neither copyable nor movable.
    std::unique_ptr<Eigen::SparseLU<SparseMatrix>> lu = std::make_unique<Eigen::SparseLU<SparseMatrix>>();
    bool analyzed = false;
    Eigen::VectorXd gamma;
  };

  FullOrderModel(std::shared_ptr<const TransportLibrary> library, SparseMatrix output,
                 kernels::Policy policy = kernels::Policy::parallel);

  Index dim() const { return library_->state_size(); }
  Index num_outputs() const { return output_.rows(); }
  const TransportLibrary& library() const { return *library_; }
  const SparseMatrix& output_matrix() const { return output_; }
  kernels::Policy policy() const { return policy_; }
  void set_policy(kernels::Policy p) { policy_ = p; }

  Workspace workspace() const;
  Eigen::VectorXd outputs(const Eigen::VectorXd& x) const { return output_ * x; }
  Eigen::VectorXd initial_state(double u0) const { return Eigen::VectorXd::Constant(dim(), u0); }
  Eigen::VectorXd lift(const Eigen::VectorXd& x) const { return x; }

  Eigen::VectorXd rhs(const Eigen::VectorXd& gamma, const Eigen::VectorXd& x, double u) const;
  // Same, remembering gamma in `ws` for a following jacobian() call.
  Eigen::VectorXd rhs(Workspace& ws, const Eigen::VectorXd& gamma, const Eigen::VectorXd& x, double u) const;
  Eigen::VectorXd input_vector(const Eigen::VectorXd& gamma) const;

  // J = A(gamma) + sum_i (A_i x + B_i u) dgamma_i/dy C at the gamma of the
  // last rhs(ws, ...) call. An empty `dgamma_dy` drops the flow feedback.
  void jacobian(Workspace& ws, const Eigen::MatrixXd& dgamma_dy, const Eigen::VectorXd& x,
                double u) const;
  // Factors I - h J for the Jacobian held in `ws`.
  void factor_step(Workspace& ws, double h) const;
  Eigen::MatrixXd solve(Workspace& ws, const Eigen::MatrixXd& rhs) const;
  Eigen::MatrixXd jacobian_times(const Workspace& ws, const Eigen::MatrixXd& s) const {
    return ws.jacobian * s;
  }
  Eigen::MatrixXd dense_jacobian(const Workspace& ws) const { return Eigen::MatrixXd(ws.jacobian); }
  // Entries of the current Jacobian that are numerically nonzero.
  Index jacobian_nonzeros(const Workspace& ws) const;

 private:
  std::shared_ptr<const TransportLibrary> library_;
  SparseMatrix output_;
  kernels::Policy policy_;
  SparseMatrix pattern_;
  kernels::SlotMap a_slots_;
  std::vector<Index> diagonal_slot_;
  std::vector<Index> output_cell_;
  // Slot of entry (row, output column c) at row * num_outputs + c.
  std::vector<Index> feedback_slot_;
};

// Galerkin-projected model with W = Q V and V^T Q V = I.
class ReducedOrderModel {
 public:
  using Matrix = Eigen::MatrixXd;

  struct Workspace {
    Eigen::MatrixXd reduced_a;  // A_r(gamma) of the last rhs(ws, ...) call
    Eigen::MatrixXd jacobian;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu;
    Eigen::MatrixXd products;   // terms x r
  };

  // Projects the library of `library` onto the basis `v` (n x r).
  ReducedOrderModel(std::shared_ptr<const TransportLibrary> library, Eigen::MatrixXd v,
                    const Eigen::VectorXd& energy_diag, const SparseMatrix& output,
                    kernels::Policy policy = kernels::Policy::parallel);
  // Rebuilds a model from archived reduced operators.
  ReducedOrderModel(std::shared_ptr<const TransportLibrary> library, Eigen::MatrixXd v,
                    Eigen::MatrixXd stacked_a_t, Eigen::MatrixXd reduced_b, Eigen::MatrixXd reduced_c,
                    Eigen::VectorXd constant_coordinates,
                    kernels::Policy policy = kernels::Policy::parallel);

  Index dim() const { return basis_.cols(); }
  Index full_dim() const { return basis_.rows(); }
  Index num_outputs() const { return reduced_c_.rows(); }
  const TransportLibrary& library() const { return *library_; }
  const Eigen::MatrixXd& basis() const { return basis_; }
  const Eigen::MatrixXd& stacked_a_t() const { return stacked_a_t_; }
  const Eigen::MatrixXd& reduced_b() const { return reduced_b_; }
  const Eigen::MatrixXd& output_matrix() const { return reduced_c_; }
  kernels::Policy policy() const { return policy_; }
  void set_policy(kernels::Policy p) { policy_ = p; }

  Workspace workspace() const;
  Eigen::VectorXd outputs(const Eigen::VectorXd& x) const { return reduced_c_ * x; }
  // Reduced coordinates of the uniform state u0 (W^T applied to u0 * 1).
  Eigen::VectorXd initial_state(double u0) const { return u0 * constant_coordinates_; }
  Eigen::VectorXd lift(const Eigen::VectorXd& x) const { return basis_ * x; }

  Eigen::MatrixXd reduced_a(const Eigen::VectorXd& gamma) const;
  Eigen::VectorXd rhs(const Eigen::VectorXd& gamma, const Eigen::VectorXd& x, double u) const;
  Eigen::VectorXd rhs(Workspace& ws, const Eigen::VectorXd& gamma, const Eigen::VectorXd& x, double u) const;
  Eigen::VectorXd input_vector(const Eigen::VectorXd& gamma) const { return reduced_b_ * gamma; }

  void jacobian(Workspace& ws, const Eigen::MatrixXd& dgamma_dy, const Eigen::VectorXd& x,
                double u) const;
  void factor_step(Workspace& ws, double h) const;
  Eigen::MatrixXd solve(Workspace& ws, const Eigen::MatrixXd& rhs) const { return ws.lu.solve(rhs); }
  Eigen::MatrixXd jacobian_times(const Workspace& ws, const Eigen::MatrixXd& s) const {
    return ws.jacobian * s;
  }
  Eigen::MatrixXd dense_jacobian(const Workspace& ws) const { return ws.jacobian; }
  Index jacobian_nonzeros(const Workspace& ws) const;

 private:
  std::shared_ptr<const TransportLibrary> library_;
  Eigen::MatrixXd basis_;
  Eigen::MatrixXd stacked_a_t_;  // terms x r^2, row i = vec(W^T A_i V)
  Eigen::MatrixXd reduced_b_;    // r x terms
  Eigen::MatrixXd reduced_c_;    // outputs x r
  Eigen::VectorXd constant_coordinates_;
  kernels::Policy policy_;
};

}  // namespace heatnet
