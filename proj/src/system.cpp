#include "heatnet/system.hpp"

#include <algorithm>

namespace heatnet {

Discretization CellSpec::make(const Network& net) const {
  if (!counts.empty()) return Discretization::from_counts(net, counts);
  if (cells_per_pipe > 0) return Discretization::uniform(net, cells_per_pipe);
  if (cells_per_meter > 0.0) return Discretization::per_meter(net, cells_per_meter);
  throw InputError("no cell count given");
}

std::vector<FlowSigns> sweep_patterns(const HydraulicModel& hydraulics, const DemandModel& demand,
                                      const TimeGrid& grid, double e_lo, double e_hi, double return_energy) {
  const Index nc = hydraulics.network().num_consumers();
  std::vector<Eigen::VectorXd> levels;
  for (double w : {0.0, 0.5, 1.0}) levels.push_back(Eigen::VectorXd::Constant(nc, e_lo + w * (e_hi - e_lo)));
  for (int parity = 0; parity < 2; ++parity) {
    Eigen::VectorXd e(nc);
    for (Index h = 0; h < nc; ++h) e[h] = (h % 2 == parity) ? e_lo : e_hi;
    levels.push_back(e);
  }
  std::vector<FlowSigns> out;
  Eigen::VectorXd chords;
  for (Index i = 0; i < grid.size(); ++i) {
    const Eigen::VectorXd g = demand.at(grid.time(i));
    for (const Eigen::VectorXd& e : levels) {
      const Eigen::VectorXd qc = (g.array() / (e.array() - return_energy)).matrix();
      const FlowField f = hydraulics.solve_loop_flows(qc, chords.size() ? &chords : nullptr);
      chords = f.q_tilde.tail(hydraulics.num_loops());
      FlowSigns s = flow_signs(f.q);
      if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(std::move(s));
    }
  }
  return out;
}

DemandStats System::stats() const {
  return aggregate_stats(demand.total_on_grid(grid()), grid(), scenario.feed_in_ratio);
}

namespace {

System assemble(Network net, const ScenarioConfig& scenario, const Discretization& disc, kernels::Policy policy,
                std::vector<FlowSigns> trained) {
  const PhysicalConstants constants;
  DemandModel demand(net, scenario.daily_mean_temperature_c);
  const double e_r = scenario.return_energy(constants);
  HydraulicModel hydraulics(net, constants);
  auto library = std::make_shared<const TransportLibrary>(net, disc, trained);
  auto coupling = std::make_shared<const FlowCoupling>(hydraulics, library, e_r,
                                                       scenario.energy_floor_k * energy_per_kelvin(constants));
  SparseMatrix output = output_map(net, disc);
  auto fom = std::make_shared<const FullOrderModel>(library, output, policy);
  return System{std::move(net), scenario, constants, std::move(demand), std::move(trained),
                library, coupling, fom, output, disc.volumes()};
}

}  // namespace

System build_system(Network net, const ScenarioConfig& scenario, const CellSpec& cells, kernels::Policy policy,
                    const std::vector<FlowSigns>& extra) {
  FrictionConfig friction;
  friction.reference_reynolds = scenario.reference_reynolds;
  initialize_friction(net, friction);
  const PhysicalConstants constants;
  const DemandModel demand(net, scenario.daily_mean_temperature_c);
  const HydraulicModel hydraulics(net, constants);
  const double e_lo = energy_from_celsius(scenario.return_temperature_c, constants) +
                      2.0 * scenario.energy_floor_k * energy_per_kelvin(constants);
  const double e_hi = energy_from_celsius(scenario.max_network_temperature_c, constants);
  std::vector<FlowSigns> trained = sweep_patterns(hydraulics, demand, scenario.grid(), e_lo, e_hi,
                                                  scenario.return_energy(constants));
  for (const FlowSigns& s : extra) {
    if (std::find(trained.begin(), trained.end(), s) == trained.end()) trained.push_back(s);
  }
  const Discretization disc = cells.make(net);
  return assemble(std::move(net), scenario, disc, policy, std::move(trained));
}

System rebuild_with_cells(const System& base, const CellSpec& cells, kernels::Policy policy,
                          const std::vector<FlowSigns>* trained) {
  return assemble(base.network, base.scenario, cells.make(base.network), policy,
                  trained != nullptr ? *trained : base.trained);
}

System with_scenario(const System& base, const ScenarioConfig& scenario, kernels::Policy policy) {
  return assemble(base.network, scenario, base.library->discretization(), policy, base.trained);
}

TrainedRom train_rom(const Network& net, const std::vector<ScenarioConfig>& training, const CellSpec& cells,
                     ReductionConfig config, Index stride, kernels::Policy policy) {
  if (training.empty()) throw InputError("at least one training scenario is required");
  // Library patterns: union over the hydraulic sweeps of all scenarios.
  std::vector<FlowSigns> patterns;
  std::vector<System> systems;
  for (const ScenarioConfig& sc : training) {
    System s = build_system(net, sc, cells, policy);
    for (const FlowSigns& p : s.trained) {
      if (std::find(patterns.begin(), patterns.end(), p) == patterns.end()) patterns.push_back(p);
    }
    systems.push_back(std::move(s));
  }
  TrainedRom out;
  for (System& s : systems) {
    s = rebuild_with_cells(s, cells, policy, &patterns);
    SimulationOptions opts;
    opts.record_flows = true;
    const TrajectoryRecord rec = simulate_constant(s, *s.fom, s.scenario.initial_temperature_c, opts);
    const Index step = stride > 0 ? stride : std::max<Index>(1, std::llround(3600.0 / s.scenario.dt_s));
    const auto c = candidates_from_trajectory(rec, step);
    out.candidates.insert(out.candidates.end(), c.begin(), c.end());
  }
  const System& base = systems.front();
  config.policy = policy;
  out.result = greedy_reduce(base.library, base.output, base.volumes, out.candidates, config);
  out.archive.library = base.library;
  out.archive.model = out.result.model;
  out.archive.cells = base.library->discretization().cells;
  out.archive.trained = base.trained;
  out.archive.tolerance = config.tolerance;
  out.archive.max_error = out.result.errors.empty()
                              ? 1.0
                              : *std::max_element(out.result.errors.begin(), out.result.errors.end());
  out.archive.log = out.result.log;
  return out;
}

System system_for_rom(const Network& net, const ScenarioConfig& scenario, const RomArchive& archive,
                      kernels::Policy policy) {
  System base = build_system(net, scenario, CellSpec{0, 0.0, archive.cells}, policy);
  return rebuild_with_cells(base, CellSpec{0, 0.0, archive.cells}, policy, &archive.trained);
}

}  // namespace heatnet
