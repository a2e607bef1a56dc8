#pragma once

#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "heatnet/control.hpp"
#include "heatnet/dae.hpp"
#include "heatnet/models.hpp"
#include "heatnet/reduction.hpp"
#include "heatnet/rom_archive.hpp"
#include "heatnet/scenario.hpp"
#include "heatnet/transport.hpp"

namespace heatnet {

// How to cut pipes into cells: fixed count per pipe, cells per meter, or explicit counts.
struct CellSpec {
  Index cells_per_pipe = 0;
  double cells_per_meter = 0.0;
  std::vector<Index> counts;

  static CellSpec per_pipe(Index n) { return {n, 0.0, {}}; }
  static CellSpec per_meter(double c) { return {0, c, {}}; }
  Discretization make(const Network& net) const;
};

// Flow directions reached by the steady hydraulics over the demand of `grid`,
// with consumer energies swept between e_lo and e_hi (uniform levels and
// alternating high/low patterns).
std::vector<FlowSigns> sweep_patterns(const HydraulicModel& hydraulics, const DemandModel& demand,
                                      const TimeGrid& grid, double e_lo, double e_hi, double return_energy);

// A network with frozen friction factors, its transport library, coupling and
// full-order model for one scenario.
struct System {
  Network network;
  ScenarioConfig scenario;
  PhysicalConstants constants;
  DemandModel demand;
  std::vector<FlowSigns> trained;
  std::shared_ptr<const TransportLibrary> library;
  std::shared_ptr<const FlowCoupling> coupling;
  std::shared_ptr<const FullOrderModel> fom;
  SparseMatrix output;
  Eigen::VectorXd volumes;

  LoadFunction load() const { return demand_load(demand); }
  TimeGrid grid() const { return scenario.grid(); }
  DemandStats stats() const;
  ConstraintSet constraints() const { return ConstraintSet::from_scenario(scenario, stats(), constants); }
  double return_energy() const { return scenario.return_energy(constants); }
};

// `extra` patterns are added to the hydraulic sweep when training the library.
System build_system(Network net, const ScenarioConfig& scenario, const CellSpec& cells,
                    kernels::Policy policy = kernels::Policy::parallel,
                    const std::vector<FlowSigns>& extra = {});

// Same network and scenario on another discretization (e.g. a reference
// mesh), trained on the same sign patterns unless `trained` is given.
System rebuild_with_cells(const System& base, const CellSpec& cells,
                          kernels::Policy policy = kernels::Policy::parallel,
                          const std::vector<FlowSigns>* trained = nullptr);

// Same network under another scenario, keeping discretization and library patterns.
System with_scenario(const System& base, const ScenarioConfig& scenario,
                     kernels::Policy policy = kernels::Policy::parallel);

struct TrainedRom {
  RomArchive archive;  // archive.model is null when the greedy did not converge
  ReductionResult result;
  std::vector<FrozenFlow> candidates;
};

// Offline phase: simulates every training scenario at constant control
// (T_initial), samples the flow field every `stride` steps (0: hourly) and
// runs the greedy reduction on the FOM of `cells`.
TrainedRom train_rom(const Network& net, const std::vector<ScenarioConfig>& training, const CellSpec& cells,
                     ReductionConfig config, Index stride = 0,
                     kernels::Policy policy = kernels::Policy::parallel);

// System whose library matches a ROM archive (same cells and sign patterns).
System system_for_rom(const Network& net, const ScenarioConfig& scenario, const RomArchive& archive,
                      kernels::Policy policy = kernels::Policy::parallel);

template <class Model>
OptimizationProblem make_problem(const System& sys, std::shared_ptr<const Model> model, int harmonics,
                                 SimulationOptions sim = {}) {
  OptimizationProblem p;
  p.control.harmonics = harmonics;
  p.objective.eta1 = sys.scenario.eta1_s2;
  p.objective.eta2 = energy_from_celsius(sys.scenario.eta2_c, sys.constants);
  p.constraints = sys.constraints();
  p.grid = sys.grid();
  p.constants = sys.constants;
  p.oracle = make_oracle(model, sys.coupling, p.grid, p.control, sys.load(), sim);
  return p;
}

// Constant control at temperature t_c, simulated from the matching stationary state.
template <class Model>
TrajectoryRecord simulate_constant(const System& sys, const Model& model, double t_c, SimulationOptions opts = {}) {
  const double u = energy_from_celsius(t_c, sys.constants);
  return simulate(model, *sys.coupling, sys.grid(), ControlSignal::constant(u), sys.load(),
                  stationary_init(model, u), opts);
}

}  // namespace heatnet
