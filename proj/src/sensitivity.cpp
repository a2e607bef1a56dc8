#include "heatnet/sensitivity.hpp"

namespace heatnet {

SpreadSeries pressure_spread(const TrajectoryRecord& rec) {
  const Index nt = rec.size();
  const bool sens = !rec.dpressure.empty();
  SpreadSeries s;
  s.value.resize(nt);
  s.high.resize(nt);
  s.low.resize(nt);
  if (sens) s.gradient.resize(nt, rec.dcontrol.cols());
  for (Index t = 0; t < nt; ++t) {
    Index hi = 0;
    Index lo = 0;
    const double max = rec.pressure_differences.row(t).maxCoeff(&hi);
    const double min = rec.pressure_differences.row(t).minCoeff(&lo);
    s.value[t] = max - min;
    s.high[t] = hi;
    s.low[t] = lo;
    if (sens) s.gradient.row(t) = rec.dpressure[t].row(hi) - rec.dpressure[t].row(lo);
  }
  return s;
}

Eigen::MatrixXd output_gradient(const TrajectoryRecord& rec, Index consumer) {
  const Index nt = rec.size();
  if (rec.doutputs.empty()) throw InputError("trajectory has no sensitivities");
  Eigen::MatrixXd g(nt, rec.dcontrol.cols());
  for (Index t = 0; t < nt; ++t) g.row(t) = rec.doutputs[t].row(consumer);
  return g;
}

std::vector<SensitivityEntry> flatten_sensitivities(const std::vector<Eigen::MatrixXd>& blocks) {
  std::vector<SensitivityEntry> out;
  for (std::size_t t = 0; t < blocks.size(); ++t) {
    const Eigen::MatrixXd& b = blocks[t];
    for (Index r = 0; r < b.rows(); ++r) {
      for (Index p = 0; p < b.cols(); ++p) out.push_back({static_cast<Index>(t), r, p, b(r, p)});
    }
  }
  return out;
}

}  // namespace heatnet
