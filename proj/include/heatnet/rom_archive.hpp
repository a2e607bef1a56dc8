#pragma once

#include <filesystem>
#include <memory>
#include <vector>

#include <json.hpp>

#include "heatnet/models.hpp"
#include "heatnet/reduction.hpp"

namespace heatnet {

// Everything needed to rebuild a reduced model against its network: the basis,
// the projected operators and the transport library it was projected from.
struct RomArchive {
  std::shared_ptr<const TransportLibrary> library;
  std::shared_ptr<const ReducedOrderModel> model;
  std::vector<Index> cells;              // per pipe
  std::vector<FlowSigns> trained;        // sign patterns of the library
  double tolerance = 0.0;
  double max_error = 0.0;                // largest certified candidate error
  std::vector<GreedyStep> log;
};

inline constexpr int kRomArchiveVersion = 1;

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& doc);

nlohmann::json rom_to_json(const RomArchive& archive);
// Rebuilds the library and reduced operators; checks them against `net`.
RomArchive rom_from_json(const nlohmann::json& doc, const Network& net,
                         kernels::Policy policy = kernels::Policy::parallel);

void save_rom(const std::filesystem::path& path, const RomArchive& archive);
RomArchive load_rom(const std::filesystem::path& path, const Network& net,
                    kernels::Policy policy = kernels::Policy::parallel);

}  // namespace heatnet
