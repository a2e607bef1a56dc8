#include "heatnet/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

#include "heatnet/errors.hpp"

namespace heatnet {

namespace {

using ComplexSparse = Eigen::SparseMatrix<std::complex<double>>;

}  // namespace

std::vector<double> log_spaced(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi >= lo) || count < 1) throw InputError("log_spaced: invalid range");
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (int k = 0; k < count; ++k) out[k] = std::exp(a + (b - a) * k / (count - 1));
  return out;
}

ReductionConfig ReductionConfig::defaults(double dt) {
  ReductionConfig c;
  const double lo = 2.0 * std::numbers::pi / kSecondsPerDay;
  const double hi = std::numbers::pi / dt;
  c.shifts = log_spaced(lo, hi, 8);
  c.error_frequencies = log_spaced(lo, hi, 24);
  c.refinement_frequencies = log_spaced(lo, hi, 64);
  return c;
}

namespace {

// Solves (i w I - A) X = B for every frequency, reusing the symbolic analysis.
std::vector<Eigen::VectorXcd> shifted_solves(const SparseMatrix& a, const Eigen::VectorXd& b,
                                             const std::vector<double>& frequencies) {
  const Index n = a.rows();
  SparseMatrix identity(n, n);
  identity.setIdentity();
  // The zero-valued identity keeps every diagonal entry in the pattern.
  ComplexSparse m = (identity * 0.0 - a).cast<std::complex<double>>();
  m.makeCompressed();
  std::vector<Index> diag(n);
  for (Index k = 0; k < n; ++k) {
    for (ComplexSparse::InnerIterator it(m, k); it; ++it) {
      if (it.row() == k) diag[k] = &it.valueRef() - m.valuePtr();
    }
  }
  const Eigen::VectorXcd rhs = b.cast<std::complex<double>>();
  Eigen::SparseLU<ComplexSparse> lu;
  lu.analyzePattern(m);
  std::vector<Eigen::VectorXcd> out;
  out.reserve(frequencies.size());
  for (double w : frequencies) {
    if (!(w > 0.0)) throw InputError("shift frequencies must be positive");
    ComplexSparse shifted = m;
    for (Index k = 0; k < n; ++k) shifted.valuePtr()[diag[k]] += std::complex<double>(0.0, w);
    lu.factorize(shifted);
    if (lu.info() != Eigen::Success) throw NumericalError("shifted transport system is singular");
    out.push_back(lu.solve(rhs));
  }
  return out;
}

}  // namespace

TransferSamples full_transfer(const TransportLibrary& library, const SparseMatrix& output,
                              const FrozenFlow& flow, const std::vector<double>& frequencies) {
  const Eigen::VectorXd gamma = library.weights(flow.q, flow.q_source);
  const auto states = shifted_solves(library.assemble_a(gamma), library.assemble_b(gamma), frequencies);
  const Eigen::SparseMatrix<std::complex<double>> c = output.cast<std::complex<double>>();
  TransferSamples h;
  h.reserve(states.size());
  for (const auto& x : states) h.push_back(c * x);
  return h;
}

TransferSamples reduced_transfer(const ReducedOrderModel& rom, const FrozenFlow& flow,
                                 const std::vector<double>& frequencies) {
  const Eigen::VectorXd gamma = rom.library().weights(flow.q, flow.q_source);
  const Eigen::MatrixXcd a = rom.reduced_a(gamma).cast<std::complex<double>>();
  const Eigen::VectorXcd b = rom.input_vector(gamma).cast<std::complex<double>>();
  const Eigen::MatrixXcd c = rom.output_matrix().cast<std::complex<double>>();
  const Index r = rom.dim();
  TransferSamples h;
  h.reserve(frequencies.size());
  for (double w : frequencies) {
    Eigen::MatrixXcd m = -a;
    m.diagonal().array() += std::complex<double>(0.0, w);
    h.push_back(c * m.partialPivLu().solve(b));
  }
  if (r == 0) {
    for (auto& v : h) v.setZero(rom.num_outputs());
  }
  return h;
}

double transfer_error(const TransferSamples& full, const TransferSamples& reduced) {
  if (full.size() != reduced.size()) throw InputError("transfer samples differ in length");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t j = 0; j < full.size(); ++j) {
    num += (full[j] - reduced[j]).squaredNorm();
    den += full[j].squaredNorm();
  }
  if (den == 0.0) return num == 0.0 ? 0.0 : 1.0;
  return std::sqrt(num / den);
}

Eigen::MatrixXd local_basis(const TransportLibrary& library, const FrozenFlow& flow,
                            const std::vector<double>& shifts) {
  const Eigen::VectorXd gamma = library.weights(flow.q, flow.q_source);
  const auto states = shifted_solves(library.assemble_a(gamma), library.assemble_b(gamma), shifts);
  Eigen::MatrixXd v(library.state_size(), 2 * static_cast<Index>(states.size()));
  for (std::size_t j = 0; j < states.size(); ++j) {
    v.col(2 * j) = states[j].real();
    v.col(2 * j + 1) = states[j].imag();
  }
  return v;
}

Eigen::MatrixXd merge_basis(const Eigen::MatrixXd& basis, const Eigen::MatrixXd& added,
                            const Eigen::VectorXd& energy_diag, double truncation) {
  const Eigen::VectorXd sq = energy_diag.cwiseSqrt();
  Eigen::MatrixXd y = added;
  for (Index k = 0; k < y.cols(); ++k) {
    const double norm = (sq.asDiagonal() * y.col(k)).norm();
    if (norm > 0.0) y.col(k) /= norm;
  }
  if (basis.cols() > 0) {
    const Eigen::MatrixXd w = energy_diag.asDiagonal() * basis;
    for (int pass = 0; pass < 2; ++pass) y -= basis * (w.transpose() * y);
  }
  const Eigen::MatrixXd scaled = sq.asDiagonal() * y;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(scaled, Eigen::ComputeThinU);
  const Eigen::VectorXd& sigma = svd.singularValues();
  const double reference = std::max(basis.cols() > 0 ? 1.0 : 0.0, sigma.size() ? sigma[0] : 0.0);
  Index keep = 0;
  while (keep < sigma.size() && sigma[keep] > truncation * reference) ++keep;
  Eigen::MatrixXd fresh = sq.cwiseInverse().asDiagonal() * svd.matrixU().leftCols(keep);
  if (basis.cols() > 0 && keep > 0) {
    // One more pass keeps the merged basis Q-orthonormal to round-off.
    const Eigen::MatrixXd w = energy_diag.asDiagonal() * basis;
    fresh -= basis * (w.transpose() * fresh);
    const Eigen::MatrixXd g = fresh.transpose() * energy_diag.asDiagonal() * fresh;
    Eigen::LLT<Eigen::MatrixXd> llt(g);
    if (llt.info() == Eigen::Success) {
      fresh = llt.matrixU().solve<Eigen::OnTheRight>(fresh);
    }
  }
  Eigen::MatrixXd merged(energy_diag.size(), basis.cols() + keep);
  merged << basis, fresh;
  return merged;
}

double reduced_spectral_abscissa(const ReducedOrderModel& rom, const FrozenFlow& flow) {
  const Eigen::VectorXd gamma = rom.library().weights(flow.q, flow.q_source);
  Eigen::EigenSolver<Eigen::MatrixXd> es(rom.reduced_a(gamma), false);
  return es.eigenvalues().real().maxCoeff();
}

namespace {

// Pool frequencies with the largest transfer mismatch at one candidate.
std::vector<double> refinement_shifts(const TransportLibrary& library, const SparseMatrix& output,
                                      const ReducedOrderModel& rom, const FrozenFlow& flow,
                                      const ReductionConfig& config, const std::vector<double>& used) {
  std::vector<double> pool;
  for (double w : config.refinement_frequencies) {
    if (std::find(used.begin(), used.end(), w) == used.end()) pool.push_back(w);
  }
  if (pool.empty()) return {};
  const TransferSamples full = full_transfer(library, output, flow, pool);
  const TransferSamples red = reduced_transfer(rom, flow, pool);
  std::vector<std::pair<double, double>> mismatch;
  for (std::size_t j = 0; j < pool.size(); ++j) mismatch.emplace_back((full[j] - red[j]).norm(), pool[j]);
  std::sort(mismatch.begin(), mismatch.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<double> out;
  for (std::size_t j = 0; j < mismatch.size() && static_cast<int>(out.size()) < config.refinement_per_step; ++j) {
    out.push_back(mismatch[j].second);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

ReductionResult greedy_reduce(std::shared_ptr<const TransportLibrary> library, const SparseMatrix& output,
                              const Eigen::VectorXd& energy_diag, const std::vector<FrozenFlow>& candidates,
                              const ReductionConfig& config) {
  if (candidates.empty()) throw InputError("greedy reduction needs at least one candidate flow");
  if (!(config.tolerance > 0.0)) throw InputError("reduction tolerance must be positive");
  if (config.shifts.empty() || config.error_frequencies.empty()) {
    throw InputError("reduction needs shifts and error frequencies");
  }
  const Index n = library->state_size();
  const Index nc = static_cast<Index>(candidates.size());

  std::vector<TransferSamples> reference(nc);
  kernels::for_each_index(config.policy, nc, [&](Index k) {
    reference[k] = full_transfer(*library, output, candidates[k], config.error_frequencies);
  });

  Eigen::MatrixXd basis(n, 0);
  if (config.include_constant) {
    basis = merge_basis(basis, Eigen::VectorXd::Ones(n), energy_diag, config.truncation);
  }

  ReductionResult result;
  std::vector<double> errors(nc, 1.0);
  auto evaluate = [&](const ReducedOrderModel& rom) {
    kernels::for_each_index(config.policy, nc, [&](Index k) {
      errors[k] = transfer_error(reference[k], reduced_transfer(rom, candidates[k], config.error_frequencies));
    });
  };

  std::shared_ptr<ReducedOrderModel> rom;
  std::vector<std::vector<double>> used(nc);  // shifts already matched per candidate
  for (int it = 0;; ++it) {
    if (basis.cols() > 0) {
      rom = std::make_shared<ReducedOrderModel>(library, basis, energy_diag, output, config.policy);
      evaluate(*rom);
    }
    const auto worst = std::max_element(errors.begin(), errors.end());
    const double max_error = *worst;
    // At least one enrichment, even when the tolerance is loose.
    if (it >= 1 && max_error < config.tolerance) {
      result.converged = true;
      break;
    }
    if (it >= config.max_iterations) break;
    const Index pick = worst - errors.begin();
    std::vector<double> shifts;
    for (double w : config.shifts) {
      if (std::find(used[pick].begin(), used[pick].end(), w) == used[pick].end()) shifts.push_back(w);
    }
    if (shifts.empty() && rom) shifts = refinement_shifts(*library, output, *rom, candidates[pick], config, used[pick]);
    if (shifts.empty()) break;  // nothing left to match at this candidate
    used[pick].insert(used[pick].end(), shifts.begin(), shifts.end());
    const Index before = basis.cols();
    Eigen::MatrixXd block = local_basis(*library, candidates[pick], shifts);
    basis = merge_basis(basis, block, energy_diag, config.truncation);
    if (config.max_dimension >= 0 && basis.cols() > config.max_dimension) {
      basis.conservativeResize(Eigen::NoChange, config.max_dimension);
    }
    result.selected.push_back(pick);
    result.log.push_back({it, pick, max_error, basis.cols(), shifts});
    if (basis.cols() == before && config.refinement_frequencies.empty()) break;
  }
  result.errors = errors;
  if (result.converged) result.model = rom;
  return result;
}

std::vector<FrozenFlow> candidates_from_trajectory(const TrajectoryRecord& rec, Index stride) {
  if (rec.pipe_flows.rows() != rec.size()) {
    throw InputError("trajectory was recorded without pipe flows");
  }
  if (stride < 1) stride = 1;
  std::vector<FrozenFlow> out;
  for (Index i = 0; i < rec.size(); i += stride) {
    out.push_back({rec.pipe_flows.row(i).transpose(), rec.source_flow[i]});
  }
  return out;
}

std::vector<FlowSigns> signs_of(const std::vector<FrozenFlow>& flows) {
  std::vector<FlowSigns> out;
  for (const FrozenFlow& f : flows) {
    FlowSigns s = flow_signs(f.q);
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(std::move(s));
  }
  return out;
}

}  // namespace heatnet
