// Serial reference kernels against their OpenMP counterparts, plus whole
// simulations of the full and reduced models under both policies.
#include <cmath>
#include <memory>
#include <numbers>
#include <random>

#include <benchmark/benchmark.h>

#include "heatnet/kernels.hpp"
#include "heatnet/system.hpp"

using namespace heatnet;

namespace {

kernels::Policy policy_of(const benchmark::State& state) {
  return state.range(0) == 0 ? kernels::Policy::serial : kernels::Policy::parallel;
}

void label(benchmark::State& state) { state.SetLabel(state.range(0) == 0 ? "serial" : "omp"); }

Eigen::MatrixXd random_matrix(Index rows, Index cols) {
  std::mt19937_64 gen(7);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = nd(gen);
  return m;
}

void accumulate_dense(benchmark::State& state) {
  const Index r = state.range(1);
  const Eigen::MatrixXd stacked = random_matrix(24, r * r);
  const Eigen::VectorXd gamma = random_matrix(24, 1);
  Eigen::MatrixXd out(r, r);
  for (auto _ : state) {
    kernels::accumulate_dense(policy_of(state), stacked, gamma, out.data());
    benchmark::DoNotOptimize(out.data());
  }
  label(state);
}

void term_products(benchmark::State& state) {
  const Index r = state.range(1);
  const Eigen::MatrixXd stacked = random_matrix(24, r * r);
  const Eigen::VectorXd x = random_matrix(r, 1);
  Eigen::MatrixXd out;
  for (auto _ : state) {
    kernels::term_products(policy_of(state), stacked, r, x, out);
    benchmark::DoNotOptimize(out.data());
  }
  label(state);
}

void accumulate_slots(benchmark::State& state) {
  const Index slots = state.range(1);
  kernels::SlotMap map;
  std::mt19937_64 gen(11);
  std::uniform_int_distribution<Index> term(0, 23);
  map.slot_begin.push_back(0);
  for (Index s = 0; s < slots; ++s) {
    for (int k = 0; k < 3; ++k) {
      map.term.push_back(term(gen));
      map.coef.push_back(1.0 + 0.1 * k);
    }
    map.slot_begin.push_back(static_cast<Index>(map.term.size()));
  }
  const Eigen::VectorXd gamma = random_matrix(24, 1);
  std::vector<double> values(slots);
  for (auto _ : state) {
    kernels::accumulate_slots(policy_of(state), map, gamma, values.data());
    benchmark::DoNotOptimize(values.data());
  }
  label(state);
}

// One day of a daily sinusoidal control on the compact fixture at 1 cell/m.
struct SimulationCase {
  System sys;
  std::shared_ptr<const ReducedOrderModel> rom;
  ControlSignal control;

  explicit SimulationCase(kernels::Policy policy) : sys(make(policy)) {
    ReductionConfig cfg = ReductionConfig::defaults(sys.scenario.dt_s);
    cfg.policy = policy;
    rom = train_rom(sys.network, {sys.scenario}, CellSpec::per_meter(1.0), cfg, 0, policy).archive.model;
    const double mid = energy_from_celsius(90.0);
    const double amp = 5.0 * energy_per_kelvin();
    control.value = [=](double t) { return mid + amp * std::sin(2.0 * std::numbers::pi * t / kSecondsPerDay); };
  }

  static System make(kernels::Policy policy) {
    ScenarioConfig sc = load_scenario(std::string(HEATNET_FIXTURE_DIR) + "/scenario_tc1.json");
    sc.te_s = kSecondsPerDay;
    return build_system(load_network(std::string(HEATNET_FIXTURE_DIR) + "/compact.json"), sc,
                        CellSpec::per_meter(1.0), policy);
  }
};

template <bool Reduced>
void simulate_day(benchmark::State& state) {
  static const SimulationCase serial(kernels::Policy::serial);
  static const SimulationCase parallel(kernels::Policy::parallel);
  const SimulationCase& c = state.range(0) == 0 ? serial : parallel;
  for (auto _ : state) {
    const double u0 = c.control.value(0.0);
    if constexpr (Reduced) {
      benchmark::DoNotOptimize(simulate(*c.rom, *c.sys.coupling, c.sys.grid(), c.control, c.sys.load(),
                                        stationary_init(*c.rom, u0)));
    } else {
      benchmark::DoNotOptimize(simulate(*c.sys.fom, *c.sys.coupling, c.sys.grid(), c.control, c.sys.load(),
                                        stationary_init(*c.sys.fom, u0)));
    }
  }
  label(state);
}

}  // namespace

BENCHMARK(accumulate_dense)->ArgsProduct({{0, 1}, {16, 64, 128}});
BENCHMARK(term_products)->ArgsProduct({{0, 1}, {16, 64, 128}});
BENCHMARK(accumulate_slots)->ArgsProduct({{0, 1}, {1000, 100000}});
BENCHMARK(simulate_day<false>)->Name("simulate_fom")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(simulate_day<true>)->Name("simulate_rom")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
