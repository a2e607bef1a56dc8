#include "heatnet/rom_archive.hpp"

#include <fstream>

#include "heatnet/errors.hpp"

namespace heatnet {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json doc;
  doc["rows"] = m.rows();
  doc["cols"] = m.cols();
  doc["data"] = std::vector<double>(m.data(), m.data() + m.size());  // column-major
  return doc;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& doc) {
  const Index rows = doc.at("rows").get<Index>();
  const Index cols = doc.at("cols").get<Index>();
  const auto data = doc.at("data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 || static_cast<Index>(data.size()) != rows * cols) {
    throw InputError("matrix entry count does not match its shape");
  }
  return Eigen::Map<const Eigen::MatrixXd>(data.data(), rows, cols);
}

nlohmann::json rom_to_json(const RomArchive& archive) {
  if (!archive.model || !archive.library) throw InputError("ROM archive is empty");
  const ReducedOrderModel& rom = *archive.model;
  nlohmann::json doc;
  doc["format"] = "heatnet-rom";
  doc["version"] = kRomArchiveVersion;
  doc["cells"] = archive.cells;
  nlohmann::json signs = nlohmann::json::array();
  for (const FlowSigns& s : archive.trained) signs.push_back(std::vector<int>(s.begin(), s.end()));
  doc["trained_signs"] = signs;
  doc["tolerance"] = archive.tolerance;
  doc["max_error"] = archive.max_error;
  doc["basis"] = matrix_to_json(rom.basis());
  doc["stacked_a_t"] = matrix_to_json(rom.stacked_a_t());
  doc["reduced_b"] = matrix_to_json(rom.reduced_b());
  doc["reduced_c"] = matrix_to_json(rom.output_matrix());
  doc["constant_coordinates"] = matrix_to_json(rom.initial_state(1.0));
  nlohmann::json log = nlohmann::json::array();
  for (const GreedyStep& s : archive.log) {
    log.push_back({{"iteration", s.iteration}, {"picked", s.picked}, {"max_error", s.max_error},
                   {"dimension", s.dimension}, {"shifts", s.shifts}});
  }
  doc["greedy_log"] = log;
  return doc;
}

RomArchive rom_from_json(const nlohmann::json& doc, const Network& net, kernels::Policy policy) {
  try {
    if (doc.at("format").get<std::string>() != "heatnet-rom") throw InputError("not a ROM archive");
    if (doc.at("version").get<int>() != kRomArchiveVersion) throw InputError("unsupported ROM archive version");
    RomArchive a;
    a.cells = doc.at("cells").get<std::vector<Index>>();
    if (static_cast<Index>(a.cells.size()) != net.num_pipes()) {
      throw InputError("ROM archive was built for a network with a different pipe count");
    }
    for (const auto& s : doc.at("trained_signs")) {
      const auto v = s.get<std::vector<int>>();
      if (static_cast<Index>(v.size()) != net.num_pipes()) throw InputError("ROM sign pattern has the wrong length");
      a.trained.emplace_back(v.begin(), v.end());
    }
    a.tolerance = doc.at("tolerance").get<double>();
    a.max_error = doc.at("max_error").get<double>();
    for (const auto& s : doc.at("greedy_log")) {
      a.log.push_back({s.at("iteration").get<int>(), s.at("picked").get<Index>(), s.at("max_error").get<double>(),
                       s.at("dimension").get<Index>(), s.value("shifts", std::vector<double>{})});
    }
    auto lib = std::make_shared<TransportLibrary>(net, Discretization::from_counts(net, a.cells), a.trained);
    Eigen::MatrixXd v = matrix_from_json(doc.at("basis"));
    Eigen::MatrixXd at = matrix_from_json(doc.at("stacked_a_t"));
    Eigen::MatrixXd b = matrix_from_json(doc.at("reduced_b"));
    Eigen::MatrixXd c = matrix_from_json(doc.at("reduced_c"));
    Eigen::VectorXd k = matrix_from_json(doc.at("constant_coordinates"));
    const Index r = v.cols();
    if (v.rows() != lib->state_size() || at.rows() != lib->num_terms() || at.cols() != r * r ||
        b.rows() != r || b.cols() != lib->num_terms() || c.cols() != r || c.rows() != net.num_consumers() ||
        k.size() != r) {
      throw InputError("ROM archive operators do not match the network discretization");
    }
    a.library = lib;
    a.model = std::make_shared<ReducedOrderModel>(lib, std::move(v), std::move(at), std::move(b), std::move(c),
                                                  std::move(k), policy);
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed ROM archive: ") + e.what());
  }
}

void save_rom(const std::filesystem::path& path, const RomArchive& archive) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << rom_to_json(archive).dump() << '\n';
}

RomArchive load_rom(const std::filesystem::path& path, const Network& net, kernels::Policy policy) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open ROM archive " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  return rom_from_json(doc, net, policy);
}

}  // namespace heatnet
