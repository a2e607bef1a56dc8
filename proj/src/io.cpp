#include "heatnet/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <openssl/evp.h>

#include "heatnet/errors.hpp"

namespace heatnet {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

Index CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<Index>(i);
  }
  throw InputError("CSV column '" + name + "' not found");
}

Eigen::VectorXd CsvTable::values(const std::string& name) const {
  const Index c = column(name);
  Eigen::VectorXd v(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) v[static_cast<Index>(i)] = rows[i][c];
  return v;
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  for (std::size_t i = 0; i < table.header.size(); ++i) out << (i ? "," : "") << table.header[i];
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_number(row[i]);
    out << '\n';
  }
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, const std::filesystem::path& path, std::size_t line) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const char* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    throw InputError(path.string() + ":" + std::to_string(line) + ": not a number: '" + s + "'");
  }
  return v;
}

}  // namespace

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw InputError(path.string() + ": empty CSV file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  t.header = split(line);
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != t.header.size()) {
      throw InputError(path.string() + ":" + std::to_string(number) + ": expected " +
                       std::to_string(t.header.size()) + " fields");
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_number(c, path, number));
    t.rows.push_back(std::move(row));
  }
  return t;
}

CsvTable trajectory_table(const TrajectoryRecord& rec, const Network& net, const PhysicalConstants& c) {
  CsvTable t;
  t.header = {"t_s", "u_T_J_m3", "u_T_C", "feed_in_W", "demand_W", "total_flow_m3_s"};
  const Index nc = net.num_consumers();
  for (Index h = 0; h < nc; ++h) t.header.push_back("y_" + net.consumers()[h].id + "_C");
  for (Index h = 0; h < nc; ++h) t.header.push_back("dp_" + net.consumers()[h].id + "_bar");
  for (Index h = 0; h < nc; ++h) t.header.push_back("q_" + net.consumers()[h].id + "_m3_s");
  for (Index i = 0; i < rec.size(); ++i) {
    std::vector<double> row{rec.times[i],
                            rec.control[i],
                            celsius_from_energy(rec.control[i], c),
                            rec.feed_in[i],
                            rec.demand.row(i).sum(),
                            rec.total_flow[i]};
    for (Index h = 0; h < nc; ++h) row.push_back(celsius_from_energy(rec.outputs(i, h), c));
    for (Index h = 0; h < nc; ++h) row.push_back(pa_to_bar(rec.pressure_differences(i, h)));
    for (Index h = 0; h < nc; ++h) row.push_back(rec.consumer_flows(i, h));
    t.rows.push_back(std::move(row));
  }
  return t;
}

CsvTable control_table(const std::vector<double>& times, const Eigen::VectorXd& u_t, const Eigen::VectorXd& u_p) {
  const Index n = static_cast<Index>(times.size());
  if (u_t.size() != n || u_p.size() != n) throw InputError("control series lengths differ");
  CsvTable t;
  t.header = {"t_s", "u_T", "u_p"};
  for (Index i = 0; i < n; ++i) t.rows.push_back({times[i], u_t[i], u_p[i]});
  return t;
}

ControlSeries read_control(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  ControlSeries s;
  const Eigen::VectorXd times = t.values("t_s");
  s.times.assign(times.data(), times.data() + times.size());
  s.u_t = t.values("u_T");
  s.u_p = t.values("u_p");
  return s;
}

namespace {

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

}  // namespace

nlohmann::json report_to_json(const OptimizationReport& r, const FourierControl& control, const ConstraintSet& set) {
  nlohmann::json doc;
  doc["kappa"] = std::vector<double>(r.kappa.data(), r.kappa.data() + r.kappa.size());
  doc["harmonics"] = control.harmonics;
  doc["period_s"] = control.period;
  doc["objective"] = r.objective;
  doc["objective_scaled"] = r.objective_scaled;
  doc["converged"] = r.converged;
  doc["status"] = r.status;
  doc["iterations"] = r.iterations;
  doc["phase1_iterations"] = r.phase1_iterations;
  doc["simulate_calls"] = r.simulate_calls;
  doc["max_violation"] = r.max_violation;
  nlohmann::json hist = nlohmann::json::array();
  for (const IterationLog& h : r.history) {
    hist.push_back({{"iteration", h.iteration},
                    {"phase1", h.phase1},
                    {"objective_scaled", h.objective},
                    {"max_violation", h.max_violation},
                    {"step_norm", h.step_norm},
                    {"merit", h.merit},
                    {"trust_radius", h.trust_radius},
                    {"simulate_calls", h.simulate_calls}});
  }
  doc["history"] = hist;
  doc["margins"] = {{"control_K", finite_or_null(r.margins.control_k)},
                    {"consumer_energy_K", finite_or_null(r.margins.consumer_k)},
                    {"pressure_spread_bar", finite_or_null(r.margins.spread_bar)},
                    {"feed_in_relative", finite_or_null(r.margins.feed_in_relative)}};
  doc["constraints"] = {{"u_max_J_m3", finite_or_null(set.u_max)},
                        {"e_min_J_m3", finite_or_null(set.e_min)},
                        {"p_min_Pa", set.p_min},
                        {"p_max_Pa", finite_or_null(set.p_max)},
                        {"spread_limit_Pa", finite_or_null(set.spread_limit)},
                        {"feed_in_cap_W", finite_or_null(set.feed_in_cap)},
                        {"relaxed_cap_W", finite_or_null(set.relaxed_cap)},
                        {"relaxation_end_s", finite_or_null(set.relaxation_end)}};
  doc["timing_s"] = {{"simulate", r.simulate_seconds}, {"qp", r.qp_seconds}, {"total", r.total_seconds}};
  return doc;
}

ValidationTable validation_errors(const TrajectoryRecord& reference, const TrajectoryRecord& coarse,
                                  const ConstraintSet& set, const Eigen::VectorXd* reference_control,
                                  const PhysicalConstants& c) {
  if (reference.size() != coarse.size() || reference.outputs.cols() != coarse.outputs.cols()) {
    throw InputError("trajectories to compare differ in shape");
  }
  ValidationTable t;
  if (reference_control != nullptr) {
    if (reference_control->size() != reference.size()) throw InputError("reference control has the wrong length");
    const Eigen::VectorXd a = reference.control.unaryExpr([&](double e) { return celsius_from_energy(e, c); });
    const Eigen::VectorXd b = reference_control->unaryExpr([&](double e) { return celsius_from_energy(e, c); });
    t.control_error = (a - b).norm() / b.norm();
  } else {
    t.control_error = std::numeric_limits<double>::quiet_NaN();
  }
  double overshoot = 0.0;
  for (Index i = 0; i < reference.size(); ++i) {
    if (reference.times[i] < set.relaxation_end || !std::isfinite(set.feed_in_cap)) continue;
    overshoot = std::max(overshoot, (reference.feed_in[i] - set.feed_in_cap) / set.feed_in_cap);
  }
  t.feed_in_overshoot = overshoot;
  double worst = 0.0;
  for (Index h = 0; h < reference.outputs.cols(); ++h) {
    const Eigen::VectorXd r = reference.outputs.col(h).unaryExpr([&](double e) { return celsius_from_energy(e, c); });
    const Eigen::VectorXd s = coarse.outputs.col(h).unaryExpr([&](double e) { return celsius_from_energy(e, c); });
    worst = std::max(worst, (r - s).norm() / r.norm());
  }
  t.output_error = worst;
  return t;
}

nlohmann::json validation_to_json(const ValidationTable& t) {
  return {{"control_error_l2_rel", finite_or_null(t.control_error)},
          {"feed_in_overshoot_max_rel", t.feed_in_overshoot},
          {"output_error_l2_max_rel", t.output_error}};
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw NumericalError("SHA-256 initialisation failed");
  }
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return hex.str();
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json doc;
  doc["command"] = command;
  doc["tool_version"] = tool_version();
  doc["inputs"] = nlohmann::json::array();
  for (const auto& p : inputs) doc["inputs"].push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
  doc["outputs"] = nlohmann::json::array();
  for (const auto& p : outputs) doc["outputs"].push_back(p.filename().string());
  doc["config"] = config;
  doc["timing_s"] = timing;
  return doc;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

const char* tool_version() { return "0.1.0"; }

}  // namespace heatnet
