#include "heatnet/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "heatnet/errors.hpp"

namespace heatnet {

PeriodicSpline::PeriodicSpline(std::vector<double> knots, double period)
    : knots_(std::move(knots)), period_(period) {
  const Index n = static_cast<Index>(knots_.size());
  if (n < 3) throw InputError("periodic spline needs at least three knots");
  if (!(period_ > 0.0)) throw InputError("periodic spline period must be positive");
  spacing_ = period_ / static_cast<double>(n);
  const double h = spacing_;
  Eigen::MatrixXd system = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd rhs(n);
  for (Index i = 0; i < n; ++i) {
    const Index prev = (i + n - 1) % n;
    const Index next = (i + 1) % n;
    system(i, prev) += h / 6.0;
    system(i, i) += 2.0 * h / 3.0;
    system(i, next) += h / 6.0;
    rhs[i] = (knots_[next] - 2.0 * knots_[i] + knots_[prev]) / h;
  }
  Eigen::VectorXd m = system.partialPivLu().solve(rhs);
  curvature_.assign(m.data(), m.data() + n);
}

double PeriodicSpline::operator()(double t) const {
  const Index n = static_cast<Index>(knots_.size());
  double local = std::fmod(t, period_);
  if (local < 0.0) local += period_;
  Index i = static_cast<Index>(std::floor(local / spacing_));
  if (i >= n) i = n - 1;
  const Index j = (i + 1) % n;
  const double b = (local - static_cast<double>(i) * spacing_) / spacing_;
  const double a = 1.0 - b;
  return a * knots_[i] + b * knots_[j] +
         ((a * a * a - a) * curvature_[i] + (b * b * b - b) * curvature_[j]) * spacing_ * spacing_ / 6.0;
}

DemandProfile DemandProfile::from_hourly(int class_id, double t_d,
                                         const std::array<double, 24>& factors) {
  DemandProfile p;
  p.class_id = class_id;
  p.daily_mean_temperature = t_d;
  p.hourly = factors;
  for (double f : factors) {
    if (!(f >= 0.0)) throw InputError("demand profile factors must be nonnegative");
  }
  p.spline = PeriodicSpline(std::vector<double>(factors.begin(), factors.end()), kSecondsPerDay);
  return p;
}

DemandProfile DemandProfile::flat() {
  std::array<double, 24> f;
  f.fill(1.0 / kSecondsPerDay);
  return from_hourly(0, 0.0, f);
}

double DemandProfile::daily_factor() const {
  double sum = 0.0;
  for (double f : hourly) sum += f;
  return sum * kSecondsPerDay / 24.0;
}

namespace {

double cyclic_gaussian(double hour, double center, double width) {
  double d = std::fmod(std::abs(hour - center), 24.0);
  d = std::min(d, 24.0 - d);
  return std::exp(-d * d / (2.0 * width * width));
}

double residential_peaks(double hour) {
  return cyclic_gaussian(hour, 6.0, 1.5) + 0.8 * cyclic_gaussian(hour, 18.0, 2.0);
}

double commercial_peaks(double hour) { return cyclic_gaussian(hour, 12.0, 3.5); }

// Relative heating demand, 1 at 3 degC, decreasing with temperature.
double heating_weight(double t_d) { return std::max(0.15, (18.0 - t_d) / 15.0); }

double peak_amplitude(double t_d) { return std::max(0.1, 0.6 + 0.02 * (3.0 - t_d)); }

}  // namespace

DemandProfile synthetic_profile(int class_id, double daily_mean_temperature) {
  double (*peaks)(double) = nullptr;
  switch (class_id) {
    case 0: peaks = residential_peaks; break;
    case 1: peaks = commercial_peaks; break;
    default: throw InputError("no synthetic demand profile for class " + std::to_string(class_id));
  }
  // Normalize so the daily factor is one at the 3 degC reference.
  double norm = 0.0;
  for (int h = 0; h < 24; ++h) norm += 1.0 + peak_amplitude(3.0) * peaks(h);
  norm *= 3600.0;
  const double w = heating_weight(daily_mean_temperature);
  const double a = peak_amplitude(daily_mean_temperature);
  std::array<double, 24> factors;
  for (int h = 0; h < 24; ++h) factors[h] = w * (1.0 + a * peaks(h)) / norm;
  return DemandProfile::from_hourly(class_id, daily_mean_temperature, factors);
}

Eigen::VectorXd demand_signal(const DemandProfile& profile, double scale, const TimeGrid& grid) {
  Eigen::VectorXd g(grid.size());
  for (Index i = 0; i < grid.size(); ++i) g[i] = scale * profile(grid.time(i));
  return g;
}

DemandModel::DemandModel(const Network& net, double daily_mean_temperature) {
  const Index nc = net.num_consumers();
  scales_.resize(nc);
  profiles_.reserve(nc);
  std::vector<std::pair<int, DemandProfile>> cache;
  for (Index c = 0; c < nc; ++c) {
    const Consumer& con = net.consumers()[c];
    scales_[c] = con.daily_energy;
    auto it = std::find_if(cache.begin(), cache.end(),
                           [&](const auto& e) { return e.first == con.class_id; });
    if (it == cache.end()) {
      cache.emplace_back(con.class_id, synthetic_profile(con.class_id, daily_mean_temperature));
      it = cache.end() - 1;
    }
    profiles_.push_back(it->second);
  }
}

DemandModel::DemandModel(std::vector<DemandProfile> per_consumer, Eigen::VectorXd scales)
    : profiles_(std::move(per_consumer)), scales_(std::move(scales)) {
  if (static_cast<Index>(profiles_.size()) != scales_.size()) {
    throw InputError("DemandModel: one profile per consumer required");
  }
}

Eigen::VectorXd DemandModel::at(double t) const {
  Eigen::VectorXd g(scales_.size());
  for (Index c = 0; c < scales_.size(); ++c) g[c] = scales_[c] * profiles_[c](t);
  return g;
}

Eigen::MatrixXd DemandModel::on_grid(const TimeGrid& grid) const {
  Eigen::MatrixXd g(grid.size(), scales_.size());
  for (Index i = 0; i < grid.size(); ++i) g.row(i) = at(grid.time(i)).transpose();
  return g;
}

Eigen::VectorXd DemandModel::total_on_grid(const TimeGrid& grid) const {
  return on_grid(grid).rowwise().sum();
}

DemandStats aggregate_stats(const Eigen::VectorXd& total_demand, const TimeGrid& grid,
                            double cap_ratio, double period) {
  if (total_demand.size() != grid.size()) {
    throw InputError("aggregate_stats: demand length does not match the grid");
  }
  double begin = grid.t0;
  double end = grid.te + 0.5 * grid.dt;
  if (grid.te - grid.t0 >= 2.0 * period - 1.0e-9) {
    begin = grid.t0 + period;
    end = grid.t0 + 2.0 * period;
  }
  double sum = 0.0;
  double peak = -std::numeric_limits<double>::infinity();
  Index count = 0;
  for (Index i = 0; i < grid.size(); ++i) {
    const double t = grid.time(i);
    if (t < begin - 1.0e-9 || t >= end - 1.0e-9) continue;
    sum += total_demand[i];
    peak = std::max(peak, total_demand[i]);
    ++count;
  }
  if (count == 0) throw InputError("aggregate_stats: empty evaluation window");
  DemandStats s;
  s.mean = sum / static_cast<double>(count);
  s.maximum = peak;
  s.feed_in_cap = s.mean + cap_ratio * (s.maximum - s.mean);
  return s;
}

ScenarioConfig ScenarioConfig::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw InputError("scenario document must be a JSON object");
  ScenarioConfig c;
  auto read = [&](const char* key, double& field) {
    if (!doc.contains(key)) return;
    if (!doc.at(key).is_number()) throw InputError(std::string("scenario key '") + key + "' must be a number");
    field = doc.at(key).get<double>();
  };
  read("T_d_C", c.daily_mean_temperature_c);
  read("T_min_cons_C", c.min_consumer_temperature_c);
  read("T_net_max_C", c.max_network_temperature_c);
  read("T_return_C", c.return_temperature_c);
  read("T_initial_C", c.initial_temperature_c);
  read("p_min_bar", c.p_min_bar);
  read("p_max_bar", c.p_max_bar);
  read("dp_spread_bar", c.spread_limit_bar);
  read("feed_in_ratio", c.feed_in_ratio);
  read("relaxation_period_s", c.relaxation_period_s);
  read("t0_s", c.t0_s);
  read("te_s", c.te_s);
  read("dt_s", c.dt_s);
  read("eta1_s2", c.eta1_s2);
  read("eta2_C", c.eta2_c);
  read("reference_reynolds", c.reference_reynolds);
  read("energy_floor_K", c.energy_floor_k);
  if (doc.contains("harmonics")) c.harmonics = doc.at("harmonics").get<int>();
  if (c.harmonics < 0) throw InputError("scenario harmonics must be nonnegative");
  if (c.spread_limit_bar > c.p_max_bar - c.p_min_bar + 1.0e-12) {
    throw InputError("scenario spread limit exceeds p_max - p_min");
  }
  (void)c.grid();  // validates the time grid
  return c;
}

nlohmann::json ScenarioConfig::to_json() const {
  return {{"T_d_C", daily_mean_temperature_c},
          {"T_min_cons_C", min_consumer_temperature_c},
          {"T_net_max_C", max_network_temperature_c},
          {"T_return_C", return_temperature_c},
          {"T_initial_C", initial_temperature_c},
          {"p_min_bar", p_min_bar},
          {"p_max_bar", p_max_bar},
          {"dp_spread_bar", spread_limit_bar},
          {"feed_in_ratio", feed_in_ratio},
          {"relaxation_period_s", relaxation_period_s},
          {"t0_s", t0_s},
          {"te_s", te_s},
          {"dt_s", dt_s},
          {"eta1_s2", eta1_s2},
          {"eta2_C", eta2_c},
          {"harmonics", harmonics},
          {"reference_reynolds", reference_reynolds},
          {"energy_floor_K", energy_floor_k}};
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open scenario file '" + path.string() + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError("scenario file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return ScenarioConfig::from_json(doc);
}

}  // namespace heatnet
