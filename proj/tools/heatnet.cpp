// heatnet: simulate, reduce, optimize, validate and benchmark district heating
// supply networks from the command line.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "heatnet/control.hpp"
#include "heatnet/io.hpp"
#include "heatnet/kernels.hpp"
#include "heatnet/reduction.hpp"
#include "heatnet/rom_archive.hpp"
#include "heatnet/system.hpp"

namespace fs = std::filesystem;
using namespace heatnet;

namespace {

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

struct MeshOptions {
  double cells_per_m = 0.04;
  Index cells = 0;

  CellSpec spec() const { return cells > 0 ? CellSpec::per_pipe(cells) : CellSpec::per_meter(cells_per_m); }
};

void add_mesh_options(CLI::App* cmd, MeshOptions& m) {
  auto* a = cmd->add_option("--cells-per-m", m.cells_per_m, "Cells per meter of pipe");
  auto* b = cmd->add_option("--cells", m.cells, "Fixed number of cells per pipe");
  a->excludes(b);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory " + dir.string() + ": " + ec.message());
}

// A control given as a constant temperature, a control CSV or a report JSON with kappa.
struct ControlInput {
  ControlSignal signal;
  std::optional<fs::path> file;
};

ControlSignal interpolated(std::vector<double> times, Eigen::VectorXd values) {
  if (times.size() < 2) throw InputError("control CSV needs at least two rows");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) throw InputError("control CSV times must increase");
  }
  ControlSignal s;
  s.value = [times = std::move(times), values = std::move(values)](double t) {
    if (t <= times.front()) return values[0];
    if (t >= times.back()) return values[static_cast<Index>(times.size()) - 1];
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const Index hi = it - times.begin();
    const double w = (t - times[hi - 1]) / (times[hi] - times[hi - 1]);
    return (1.0 - w) * values[hi - 1] + w * values[hi];
  };
  return s;
}

ControlInput parse_control(const std::string& text) {
  ControlInput in;
  if (fs::exists(text)) {
    in.file = text;
    if (fs::path(text).extension() == ".json") {
      std::ifstream f(text);
      nlohmann::json doc;
      try {
        f >> doc;
        FourierControl fc;
        fc.harmonics = doc.at("harmonics").get<int>();
        fc.period = doc.value("period_s", kSecondsPerDay);
        const auto k = doc.at("kappa").get<std::vector<double>>();
        in.signal = fc.signal(Eigen::Map<const Eigen::VectorXd>(k.data(), static_cast<Index>(k.size())));
      } catch (const nlohmann::json::exception& e) {
        throw InputError(text + ": " + e.what());
      }
      return in;
    }
    const ControlSeries c = read_control(text);
    in.signal = interpolated(c.times, c.u_t);
    return in;
  }
  double t_c = 0.0;
  try {
    std::size_t used = 0;
    t_c = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
  } catch (const std::exception&) {
    throw InputError("--control must be a temperature in Celsius or an existing file: " + text);
  }
  in.signal = ControlSignal::constant(energy_from_celsius(t_c));
  return in;
}

// Simulation on either the FOM of `sys` or a ROM.
struct ModelChoice {
  std::shared_ptr<const ReducedOrderModel> rom;
  std::optional<System> rom_system;
};

TrajectoryRecord run(const System& sys, const ModelChoice& m, const ControlSignal& control,
                     const SimulationOptions& opts = {}) {
  const double u0 = control.value(sys.grid().t0);
  if (m.rom) {
    return simulate(*m.rom, *m.rom_system->coupling, sys.grid(), control, sys.load(), stationary_init(*m.rom, u0),
                    opts);
  }
  return simulate(*sys.fom, *sys.coupling, sys.grid(), control, sys.load(), stationary_init(*sys.fom, u0), opts);
}

kernels::Policy g_policy = kernels::Policy::parallel;

int cmd_simulate(const fs::path& network, const fs::path& scenario, const std::string& control_text,
                 const MeshOptions& mesh, const std::string& model, const fs::path& out) {
  const auto start = Clock::now();
  const ScenarioConfig cfg = load_scenario(scenario);
  Network net = load_network(network);
  const ControlInput control = parse_control(control_text);
  ensure_dir(out);
  RunManifest manifest;
  manifest.command = "simulate";
  manifest.inputs = {network, scenario};
  if (control.file) manifest.inputs.push_back(*control.file);

  TrajectoryRecord rec;
  const auto sim_start = Clock::now();
  if (model.empty() || model == "fom") {
    const System sys = build_system(net, cfg, mesh.spec(), g_policy);
    rec = run(sys, {}, control.signal);
    manifest.config["state_dim"] = sys.fom->dim();
  } else {
    const RomArchive archive = load_rom(model, net, g_policy);
    ModelChoice m{archive.model, system_for_rom(net, cfg, archive, g_policy)};
    rec = run(*m.rom_system, m, control.signal);
    manifest.inputs.push_back(model);
    manifest.config["state_dim"] = archive.model->dim();
  }
  const double sim_seconds = elapsed(sim_start);
  write_csv(out / "trajectory.csv", trajectory_table(rec, net));
  manifest.outputs = {out / "trajectory.csv"};
  manifest.config["scenario"] = cfg.to_json();
  manifest.config["cells_per_m"] = mesh.cells > 0 ? nlohmann::json() : nlohmann::json(mesh.cells_per_m);
  manifest.config["cells_per_pipe"] = mesh.cells;
  manifest.config["model"] = model.empty() ? "fom" : model;
  manifest.timing = {{"simulate", sim_seconds}, {"total", elapsed(start)}};
  write_json(out / "manifest.json", manifest.to_json());
  return 0;
}

int cmd_reduce(const fs::path& network, const std::vector<fs::path>& training, double delta, Index max_dim,
               const MeshOptions& mesh, const fs::path& out) {
  const auto start = Clock::now();
  const Network net = load_network(network);
  std::vector<ScenarioConfig> scenarios;
  for (const auto& p : training) scenarios.push_back(load_scenario(p));
  ReductionConfig config = ReductionConfig::defaults(scenarios.front().dt_s);
  config.tolerance = delta;
  config.max_dimension = max_dim;
  const TrainedRom trained = train_rom(net, scenarios, mesh.spec(), config, 0, g_policy);

  if (out.has_parent_path()) ensure_dir(out.parent_path());
  fs::path log_path = out;
  log_path.replace_extension(".log.csv");
  CsvTable log;
  log.header = {"iteration", "picked", "max_error", "dimension"};
  for (const GreedyStep& s : trained.result.log) {
    log.rows.push_back({double(s.iteration), double(s.picked), s.max_error, double(s.dimension)});
  }
  write_csv(log_path, log);
  RunManifest manifest;
  manifest.command = "reduce";
  manifest.inputs.push_back(network);
  for (const auto& p : training) manifest.inputs.push_back(p);
  manifest.config = {{"delta", delta},
                     {"max_dimension", max_dim},
                     {"candidates", trained.candidates.size()},
                     {"converged", trained.result.converged},
                     {"max_error", trained.archive.max_error}};
  if (!trained.result.converged) {
    manifest.outputs = {log_path};
    manifest.timing = {{"total", elapsed(start)}};
    fs::path mpath = out;
    mpath.replace_extension(".manifest.json");
    write_json(mpath, manifest.to_json());
    throw NumericalError("greedy reduction did not reach the tolerance " + format_number(delta) +
                         "; largest candidate error " + format_number(trained.archive.max_error) +
                         " at dimension " +
                         std::to_string(trained.result.log.empty() ? 0 : trained.result.log.back().dimension));
  }
  save_rom(out, trained.archive);
  manifest.outputs = {out, log_path};
  manifest.config["dimension"] = trained.archive.model->dim();
  manifest.config["full_dimension"] = trained.archive.model->full_dim();
  manifest.timing = {{"total", elapsed(start)}};
  fs::path mpath = out;
  mpath.replace_extension(".manifest.json");
  write_json(mpath, manifest.to_json());
  std::cout << "reduced " << trained.archive.model->full_dim() << " -> " << trained.archive.model->dim()
            << " states, max candidate error " << trained.archive.max_error << "\n";
  return 0;
}

int cmd_optimize(const fs::path& network, const fs::path& scenario, const std::string& model,
                 const MeshOptions& mesh, int harmonics, const fs::path& out) {
  const auto start = Clock::now();
  const ScenarioConfig cfg = load_scenario(scenario);
  const Network net = load_network(network);
  ensure_dir(out);
  const int k = harmonics > 0 ? harmonics : cfg.harmonics;

  std::optional<System> sys;
  OptimizationProblem problem;
  RunManifest manifest;
  manifest.command = "optimize";
  manifest.inputs = {network, scenario};
  if (model.empty() || model == "fom") {
    sys.emplace(build_system(net, cfg, mesh.spec(), g_policy));
    problem = make_problem(*sys, sys->fom, k);
  } else {
    const RomArchive archive = load_rom(model, net, g_policy);
    sys.emplace(system_for_rom(net, cfg, archive, g_policy));
    problem = make_problem(*sys, archive.model, k);
    manifest.inputs.push_back(model);
  }
  const Eigen::VectorXd kappa0 = problem.control.constant(energy_from_celsius(cfg.initial_temperature_c));
  const OptimizationReport report = optimize(problem, kappa0);

  nlohmann::json doc = report_to_json(report, problem.control, problem.constraints);
  write_json(out / "report.json", doc);
  write_csv(out / "control.csv",
            control_table(report.trajectory.times, report.trajectory.control, report.pressure.source_pressure));
  write_csv(out / "trajectory.csv", trajectory_table(report.trajectory, net));
  manifest.outputs = {out / "report.json", out / "control.csv", out / "trajectory.csv"};
  manifest.config = {{"scenario", cfg.to_json()}, {"model", model.empty() ? "fom" : model}, {"harmonics", k}};
  manifest.timing = {{"simulate", report.simulate_seconds}, {"qp", report.qp_seconds}, {"total", elapsed(start)}};
  write_json(out / "manifest.json", manifest.to_json());
  std::cout << "objective " << report.objective_scaled << " K^2, " << report.simulate_calls << " DAE solves, "
            << report.status << "\n";
  return 0;
}

int cmd_validate(const fs::path& control_csv, const fs::path& network, const fs::path& scenario,
                 double fine_cells_per_m, const MeshOptions& mesh, const std::string& model,
                 const std::optional<fs::path>& reference, const fs::path& out) {
  const auto start = Clock::now();
  const ScenarioConfig cfg = load_scenario(scenario);
  const Network net = load_network(network);
  const ControlSeries series = read_control(control_csv);
  const ControlSignal control = interpolated(series.times, series.u_t);
  ensure_dir(out);

  // Coarse model that produced the control, then the fine reference mesh with
  // the same library patterns.
  System coarse = build_system(net, cfg, mesh.spec(), g_policy);
  ModelChoice choice;
  if (!model.empty() && model != "fom") {
    const RomArchive archive = load_rom(model, net, g_policy);
    choice.rom = archive.model;
    choice.rom_system.emplace(system_for_rom(net, cfg, archive, g_policy));
    coarse = *choice.rom_system;
  }
  const System fine = rebuild_with_cells(coarse, CellSpec::per_meter(fine_cells_per_m), g_policy);
  const TrajectoryRecord rec_coarse = run(coarse, choice, control);
  const TrajectoryRecord rec_fine = run(fine, {}, control);

  Eigen::VectorXd ref;
  if (reference) {
    const ControlSeries r = read_control(*reference);
    ref = r.u_t;
  }
  const ValidationTable table =
      validation_errors(rec_fine, rec_coarse, coarse.constraints(), reference ? &ref : nullptr);
  nlohmann::json doc = validation_to_json(table);
  doc["fine_state_dim"] = fine.fom->dim();
  write_json(out / "validation.json", doc);
  write_csv(out / "trajectory_fine.csv", trajectory_table(rec_fine, net));
  RunManifest manifest;
  manifest.command = "validate";
  manifest.inputs = {control_csv, network, scenario};
  if (reference) manifest.inputs.push_back(*reference);
  manifest.outputs = {out / "validation.json", out / "trajectory_fine.csv"};
  manifest.config = {{"fine_cells_per_m", fine_cells_per_m}, {"model", model.empty() ? "fom" : model}};
  manifest.timing = {{"total", elapsed(start)}};
  write_json(out / "manifest.json", manifest.to_json());
  return 0;
}

// Largest numerically nonzero Jacobian count over the recorded states.
template <class Model>
Index max_jacobian_nonzeros(const Model& model, const FlowCoupling& coupling, const TrajectoryRecord& rec,
                            const LoadFunction& load) {
  Index best = 0;
  auto ws = model.workspace();
  const Index stride = std::max<Index>(1, rec.size() / 24);
  for (Index i = 0; i < rec.size(); i += stride) {
    const Eigen::VectorXd& x = rec.states[i];
    const CouplingState cs = coupling.evaluate(model.outputs(x), load(rec.times[i]), true);
    model.rhs(ws, cs.gamma, x, rec.control[i]);
    model.jacobian(ws, cs.dgamma_dy, x, rec.control[i]);
    best = std::max(best, model.jacobian_nonzeros(ws));
  }
  return best;
}

int cmd_bench(const fs::path& network, const fs::path& scenario, const std::vector<std::string>& models,
              const fs::path& out) {
  const ScenarioConfig cfg = load_scenario(scenario);
  const Network net = load_network(network);
  // Daily sinusoid of 5 K around the initial temperature keeps the transport busy.
  ControlSignal control;
  const double u_mid = energy_from_celsius(cfg.initial_temperature_c);
  const double amp = 5.0 * energy_per_kelvin();
  control.value = [=](double t) { return u_mid + amp * std::sin(2.0 * std::numbers::pi * t / kSecondsPerDay); };
  SimulationOptions opts;
  opts.record_states = true;
  nlohmann::json rows = nlohmann::json::array();
  for (const std::string& spec : models) {
    nlohmann::json row{{"model", spec}};
    const auto colon = spec.find(':');
    const std::string kind = spec.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
    if (kind == "fom") {
      const double cpm = arg.empty() ? 0.04 : std::stod(arg);
      const System sys = build_system(net, cfg, CellSpec::per_meter(cpm), g_policy);
      const auto t = Clock::now();
      const TrajectoryRecord rec = run(sys, {}, control, opts);
      row["seconds"] = elapsed(t);
      row["state_dim"] = sys.fom->dim();
      row["jacobian_nonzeros"] = max_jacobian_nonzeros(*sys.fom, *sys.coupling, rec, sys.load());
      row["newton_iterations"] = rec.total_newton_iterations();
    } else if (kind == "rom") {
      const RomArchive archive = load_rom(arg, net, g_policy);
      ModelChoice m{archive.model, system_for_rom(net, cfg, archive, g_policy)};
      const auto t = Clock::now();
      const TrajectoryRecord rec = run(*m.rom_system, m, control, opts);
      row["seconds"] = elapsed(t);
      row["state_dim"] = archive.model->dim();
      row["jacobian_nonzeros"] = max_jacobian_nonzeros(*archive.model, *m.rom_system->coupling, rec,
                                                       m.rom_system->load());
      row["newton_iterations"] = rec.total_newton_iterations();
    } else {
      throw InputError("unknown model kind '" + kind + "' (expected fom[:cells_per_m] or rom:<file>)");
    }
    rows.push_back(row);
  }
  if (out.has_parent_path()) ensure_dir(out.parent_path());
  write_json(out, {{"horizon_s", cfg.te_s - cfg.t0_s}, {"models", rows}});
  return 0;
}

void report_error(const char* kind, const std::string& what) {
  nlohmann::json doc{{"error", kind}, {"message", what}};
  std::cerr << doc.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"District heating network simulation, model reduction and optimal control"};
  app.require_subcommand(1);
  int jobs = 0;
  bool serial = false;
  app.add_option("--jobs", jobs, "Upper bound on worker threads");
  app.add_flag("--serial", serial, "Use the serial reference kernels");

  fs::path network, scenario, out, control_csv;
  std::string control_text, model;
  MeshOptions mesh;
  int harmonics = 0;

  auto* sim = app.add_subcommand("simulate", "Simulate one control and write the trajectory CSV");
  sim->add_option("--network", network, "Network JSON")->required();
  sim->add_option("--scenario", scenario, "Scenario JSON")->required();
  sim->add_option("--control", control_text, "Constant temperature (C), control CSV or report JSON")->required();
  sim->add_option("--model", model, "fom or a ROM archive");
  add_mesh_options(sim, mesh);
  sim->add_option("--out", out, "Output directory")->required();

  std::vector<fs::path> training;
  double delta = 1.0e-3;
  Index max_dim = -1;
  fs::path rom_out;
  auto* red = app.add_subcommand("reduce", "Build a reduced model by greedy linearization sampling");
  red->add_option("--network", network, "Network JSON")->required();
  red->add_option("--training-scenarios", training, "Scenario JSON files")->required();
  red->add_option("--delta", delta, "Transfer-function error tolerance");
  red->add_option("--max-dim", max_dim, "Cap on the reduced dimension");
  add_mesh_options(red, mesh);
  red->add_option("--out", rom_out, "ROM archive path")->required();

  auto* opt = app.add_subcommand("optimize", "Compute an optimal feed-in temperature");
  opt->add_option("--network", network, "Network JSON")->required();
  opt->add_option("--scenario", scenario, "Scenario JSON")->required();
  opt->add_option("--model", model, "fom or a ROM archive");
  opt->add_option("--harmonics", harmonics, "Number of Fourier harmonics (default from scenario)");
  add_mesh_options(opt, mesh);
  opt->add_option("--out", out, "Output directory")->required();

  double fine_cells = 0.2;
  std::optional<fs::path> reference;
  auto* val = app.add_subcommand("validate", "Re-simulate a control on a fine reference mesh");
  val->add_option("--control-csv", control_csv, "Control CSV (t_s,u_T,u_p)")->required();
  val->add_option("--network", network, "Network JSON")->required();
  val->add_option("--scenario", scenario, "Scenario JSON")->required();
  val->add_option("--fine-cells", fine_cells, "Cells per meter of the reference mesh");
  val->add_option("--model", model, "Model that produced the control: fom or a ROM archive");
  val->add_option("--reference-control", reference, "Control CSV of the reference optimum");
  add_mesh_options(val, mesh);
  val->add_option("--out", out, "Output directory")->required();

  std::vector<std::string> models{"fom"};
  fs::path bench_out;
  auto* bench = app.add_subcommand("bench", "Time one horizon per model and count Jacobian nonzeros");
  bench->add_option("--network", network, "Network JSON")->required();
  bench->add_option("--scenario", scenario, "Scenario JSON")->required();
  bench->add_option("--models", models, "fom[:cells_per_m] or rom:<archive>");
  bench->add_option("--out", bench_out, "Result JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (jobs > 0) kernels::set_max_threads(jobs);
    if (serial) g_policy = kernels::Policy::serial;
    if (*sim) return cmd_simulate(network, scenario, control_text, mesh, model, out);
    if (*red) return cmd_reduce(network, training, delta, max_dim, mesh, rom_out);
    if (*opt) return cmd_optimize(network, scenario, model, mesh, harmonics, out);
    if (*val) return cmd_validate(control_csv, network, scenario, fine_cells, mesh, model, reference, out);
    if (*bench) return cmd_bench(network, scenario, models, bench_out);
  } catch (const InputError& e) {
    report_error("input", e.what());
    return 2;
  } catch (const InfeasibleError& e) {
    report_error("infeasible", e.what());
    return 4;
  } catch (const NumericalError& e) {
    report_error("numerical", e.what());
    return 3;
  }
  return 0;
}
