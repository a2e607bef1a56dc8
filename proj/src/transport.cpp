#include "heatnet/transport.hpp"

#include <algorithm>
#include <cmath>

#include "heatnet/errors.hpp"

namespace heatnet {

Discretization Discretization::from_counts(const Network& net, std::vector<Index> counts) {
  if (static_cast<Index>(counts.size()) != net.num_pipes()) {
    throw InputError("discretization needs one cell count per pipe");
  }
  Discretization d;
  d.cells = std::move(counts);
  const Index np = net.num_pipes();
  d.offset.resize(np);
  d.cell_length.resize(np);
  d.cell_volume.resize(np);
  d.from_node.resize(np);
  d.to_node.resize(np);
  for (Index p = 0; p < np; ++p) {
    if (d.cells[p] < 1) throw InputError("every pipe needs at least one cell");
    const Pipe& pipe = net.pipes()[p];
    d.offset[p] = d.size;
    d.size += d.cells[p];
    d.cell_length[p] = pipe.length / static_cast<double>(d.cells[p]);
    d.cell_volume[p] = pipe.area() * d.cell_length[p];
    d.from_node[p] = net.pipe_from(p);
    d.to_node[p] = net.pipe_to(p);
  }
  return d;
}

Discretization Discretization::uniform(const Network& net, Index cells_per_pipe) {
  return from_counts(net, std::vector<Index>(net.num_pipes(), cells_per_pipe));
}

Discretization Discretization::per_meter(const Network& net, double cells_per_meter) {
  if (!(cells_per_meter > 0.0)) throw InputError("cells per meter must be positive");
  std::vector<Index> counts(net.num_pipes());
  for (Index p = 0; p < net.num_pipes(); ++p) {
    counts[p] = std::max<Index>(1, std::llround(net.pipes()[p].length * cells_per_meter));
  }
  return from_counts(net, std::move(counts));
}

Index Discretization::end_cell(Index pipe, Index node) const {
  if (node == from_node[pipe]) return offset[pipe];
  if (node == to_node[pipe]) return offset[pipe] + cells[pipe] - 1;
  throw InputError("node is not an end of the pipe");
}

Eigen::VectorXd Discretization::volumes() const {
  Eigen::VectorXd v(size);
  for (Index p = 0; p < num_pipes(); ++p) v.segment(offset[p], cells[p]).setConstant(cell_volume[p]);
  return v;
}

FlowSigns flow_signs(const Eigen::VectorXd& q) {
  FlowSigns s(q.size());
  for (Index p = 0; p < q.size(); ++p) s[p] = q[p] > kZeroFlow ? 1 : (q[p] < -kZeroFlow ? -1 : 0);
  return s;
}

FlowSigns forward_signs(const Network& net) { return FlowSigns(net.num_pipes(), 1); }

namespace {

// Node a pipe flows into / out of for the given direction.
Index head_node(const Discretization& d, Index p, int sign) {
  return sign > 0 ? d.to_node[p] : d.from_node[p];
}
Index tail_node(const Discretization& d, Index p, int sign) {
  return sign > 0 ? d.from_node[p] : d.to_node[p];
}

std::string direction_name(int sign) { return sign > 0 ? "forward" : "reversed"; }

}  // namespace

TransportLibrary::TransportLibrary(const Network& net, Discretization disc,
                                   const std::vector<FlowSigns>& trained)
    : disc_(std::move(disc)), source_(net.source_node()) {
  const Index np = net.num_pipes();
  if (disc_.num_pipes() != np) throw InputError("discretization does not match the network");
  for (const Pipe& pipe : net.pipes()) pipe_ids_.push_back(pipe.id);
  incident_.resize(net.num_nodes());
  for (Index n = 0; n < net.num_nodes(); ++n) incident_[n] = net.incident_pipes(n);

  std::vector<FlowSigns> patterns = trained;
  if (patterns.empty()) patterns.push_back(forward_signs(net));

  // Collect directions and couplings in a deterministic order.
  std::vector<std::array<bool, 2>> direction(np, {false, false});
  std::vector<std::vector<std::pair<Index, Index>>> couplings(net.num_nodes());
  std::vector<bool> source_fed(np, false);
  for (const FlowSigns& s : patterns) {
    if (static_cast<Index>(s.size()) != np) throw InputError("sign pattern length does not match pipes");
    for (Index p = 0; p < np; ++p) {
      if (s[p] != 0) direction[p][s[p] > 0 ? 1 : 0] = true;
    }
    for (Index n = 0; n < net.num_nodes(); ++n) {
      for (Index beta : incident_[n]) {
        if (s[beta] == 0 || head_node(disc_, beta, s[beta]) != n) continue;
        for (Index alpha : incident_[n]) {
          if (alpha == beta || s[alpha] == 0 || tail_node(disc_, alpha, s[alpha]) != n) continue;
          auto key = std::make_pair(beta, alpha);
          if (std::find(couplings[n].begin(), couplings[n].end(), key) == couplings[n].end()) {
            couplings[n].push_back(key);
          }
        }
      }
    }
    for (Index alpha : incident_[source_]) {
      if (s[alpha] != 0 && tail_node(disc_, alpha, s[alpha]) == source_) source_fed[alpha] = true;
    }
  }

  advection_term_[0].assign(np, -1);
  advection_term_[1].assign(np, -1);
  source_term_.assign(np, -1);
  mixing_lookup_.assign(net.num_nodes(), {});

  auto add = [&](FluxTerm t, std::vector<Triplet> a, std::vector<std::pair<Index, double>> b) {
    terms_.push_back(t);
    a_entries_.push_back(std::move(a));
    b_entries_.push_back(std::move(b));
    return static_cast<Index>(terms_.size()) - 1;
  };

  for (Index p = 0; p < np; ++p) {
    for (int sign : {1, -1}) {
      if (!direction[p][sign > 0 ? 1 : 0]) continue;
      std::vector<Triplet> a;
      const Index n = disc_.cells[p];
      for (Index j = 0; j < n; ++j) {
        const Index row = disc_.cell(p, j);
        a.emplace_back(row, row, -1.0);
        const Index up = j - sign;
        if (up >= 0 && up < n) a.emplace_back(row, disc_.cell(p, up), 1.0);
      }
      advection_term_[sign > 0 ? 1 : 0][p] = add({TermKind::advection, p, sign, -1, -1}, std::move(a), {});
    }
  }
  for (Index node = 0; node < net.num_nodes(); ++node) {
    for (auto [beta, alpha] : couplings[node]) {
      const int sign = tail_node(disc_, alpha, 1) == node ? 1 : -1;
      std::vector<Triplet> a{{disc_.end_cell(alpha, node), disc_.end_cell(beta, node), 1.0}};
      add({TermKind::mixing, alpha, sign, node, beta}, std::move(a), {});
      mixing_lookup_[node].emplace_back(beta, alpha);
    }
  }
  for (Index alpha = 0; alpha < np; ++alpha) {
    if (!source_fed[alpha]) continue;
    const int sign = tail_node(disc_, alpha, 1) == source_ ? 1 : -1;
    source_term_[alpha] =
        add({TermKind::source, alpha, sign, source_, -1}, {}, {{disc_.end_cell(alpha, source_), 1.0}});
  }
}

SparseMatrix TransportLibrary::a_matrix(Index term) const {
  SparseMatrix a(disc_.size, disc_.size);
  a.setFromTriplets(a_entries_[term].begin(), a_entries_[term].end());
  return a;
}

Eigen::VectorXd TransportLibrary::b_vector(Index term) const {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(disc_.size);
  for (auto [row, c] : b_entries_[term]) b[row] += c;
  return b;
}

void TransportLibrary::node_inflows(const Eigen::VectorXd& q, double q_source,
                                    std::vector<double>& inflow) const {
  inflow.assign(incident_.size(), 0.0);
  for (Index p = 0; p < q.size(); ++p) {
    if (q[p] > kZeroFlow) inflow[disc_.to_node[p]] += q[p];
    else if (q[p] < -kZeroFlow) inflow[disc_.from_node[p]] -= q[p];
  }
  if (q_source > kZeroFlow) inflow[source_] += q_source;
}

bool TransportLibrary::covers(const FlowSigns& signs) const {
  const Index np = num_pipes();
  for (Index p = 0; p < np; ++p) {
    if (signs[p] != 0 && advection_term_[signs[p] > 0 ? 1 : 0][p] < 0) return false;
  }
  for (Index node = 0; node < static_cast<Index>(incident_.size()); ++node) {
    for (Index beta : incident_[node]) {
      if (signs[beta] == 0 || head_node(disc_, beta, signs[beta]) != node) continue;
      for (Index alpha : incident_[node]) {
        if (alpha == beta || signs[alpha] == 0 || tail_node(disc_, alpha, signs[alpha]) != node) continue;
        const auto& lk = mixing_lookup_[node];
        if (std::find(lk.begin(), lk.end(), std::make_pair(beta, alpha)) == lk.end()) return false;
      }
    }
  }
  return true;
}

void TransportLibrary::check_coverage(const Eigen::VectorXd& q, double q_source) const {
  if (q.size() != num_pipes()) throw InputError("flow vector does not match the pipe count");
  const FlowSigns s = flow_signs(q);
  for (Index p = 0; p < num_pipes(); ++p) {
    if (s[p] != 0 && advection_term_[s[p] > 0 ? 1 : 0][p] < 0) {
      throw NumericalError("flow direction " + direction_name(s[p]) + " in pipe '" +
                           pipe_ids_[p] + "' was not seen during training");
    }
  }
  if (covers(s)) {
    if (q_source > kZeroFlow) {
      for (Index alpha : incident_[source_]) {
        if (s[alpha] != 0 && tail_node(disc_, alpha, s[alpha]) == source_ && source_term_[alpha] < 0) {
          throw NumericalError("source feeding pipe '" + pipe_ids_[alpha] +
                               "' was not seen during training");
        }
      }
    }
    return;
  }
  for (Index node = 0; node < static_cast<Index>(incident_.size()); ++node) {
    for (Index beta : incident_[node]) {
      if (s[beta] == 0 || head_node(disc_, beta, s[beta]) != node) continue;
      for (Index alpha : incident_[node]) {
        if (alpha == beta || s[alpha] == 0 || tail_node(disc_, alpha, s[alpha]) != node) continue;
        const auto& lk = mixing_lookup_[node];
        if (std::find(lk.begin(), lk.end(), std::make_pair(beta, alpha)) == lk.end()) {
          throw NumericalError("coupling from pipe '" + pipe_ids_[beta] + "' into pipe '" +
                               pipe_ids_[alpha] + "' was not seen during training");
        }
      }
    }
  }
}

Eigen::VectorXd TransportLibrary::weights(const Eigen::VectorXd& q, double q_source) const {
  check_coverage(q, q_source);
  std::vector<double> inflow;
  node_inflows(q, q_source, inflow);
  Eigen::VectorXd gamma(num_terms());
  for (Index i = 0; i < num_terms(); ++i) {
    const FluxTerm& t = terms_[i];
    const double flow = t.sign * q[t.pipe];
    const double out = flow > kZeroFlow ? flow / disc_.cell_volume[t.pipe] : 0.0;
    switch (t.kind) {
      case TermKind::advection:
        gamma[i] = out;
        break;
      case TermKind::mixing: {
        const double total = inflow[t.node];
        const double in = q[t.upstream] * (head_node(disc_, t.upstream, 1) == t.node ? 1.0 : -1.0);
        gamma[i] = (total > kZeroFlow && in > kZeroFlow) ? out * in / total : 0.0;
        break;
      }
      case TermKind::source: {
        const double total = inflow[t.node];
        gamma[i] = (total > kZeroFlow && q_source > kZeroFlow) ? out * q_source / total : 0.0;
        break;
      }
    }
  }
  return gamma;
}

Eigen::MatrixXd TransportLibrary::weight_derivative(const Eigen::VectorXd& q, double q_source) const {
  check_coverage(q, q_source);
  const Index np = num_pipes();
  std::vector<double> inflow;
  node_inflows(q, q_source, inflow);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(num_terms(), np + 1);

  // d inflow[node] / d w, added to row `i` with factor `scale`.
  auto add_inflow_derivative = [&](Index i, Index node, double scale) {
    for (Index p : incident_[node]) {
      if (q[p] > kZeroFlow && disc_.to_node[p] == node) d(i, p) += scale;
      else if (q[p] < -kZeroFlow && disc_.from_node[p] == node) d(i, p) -= scale;
    }
    if (node == source_ && q_source > kZeroFlow) d(i, np) += scale;
  };

  for (Index i = 0; i < num_terms(); ++i) {
    const FluxTerm& t = terms_[i];
    const double vol = disc_.cell_volume[t.pipe];
    const double flow = t.sign * q[t.pipe];
    if (!(flow > kZeroFlow)) continue;
    const double out = flow / vol;
    switch (t.kind) {
      case TermKind::advection:
        d(i, t.pipe) = t.sign / vol;
        break;
      case TermKind::mixing: {
        const double total = inflow[t.node];
        const double in_sign = head_node(disc_, t.upstream, 1) == t.node ? 1.0 : -1.0;
        const double in = q[t.upstream] * in_sign;
        if (!(total > kZeroFlow && in > kZeroFlow)) break;
        const double gamma = out * in / total;
        d(i, t.pipe) += t.sign * in / (vol * total);
        d(i, t.upstream) += in_sign * out / total;
        add_inflow_derivative(i, t.node, -gamma / total);
        break;
      }
      case TermKind::source: {
        const double total = inflow[t.node];
        if (!(total > kZeroFlow && q_source > kZeroFlow)) break;
        const double gamma = out * q_source / total;
        d(i, t.pipe) += t.sign * q_source / (vol * total);
        d(i, np) += out / total;
        add_inflow_derivative(i, t.node, -gamma / total);
        break;
      }
    }
  }
  return d;
}

SparseMatrix TransportLibrary::assemble_a(const Eigen::VectorXd& gamma) const {
  std::vector<Triplet> all;
  for (Index i = 0; i < num_terms(); ++i) {
    if (gamma[i] == 0.0) continue;
    for (const Triplet& t : a_entries_[i]) all.emplace_back(t.row(), t.col(), gamma[i] * t.value());
  }
  SparseMatrix a(disc_.size, disc_.size);
  a.setFromTriplets(all.begin(), all.end());
  return a;
}

Eigen::VectorXd TransportLibrary::assemble_b(const Eigen::VectorXd& gamma) const {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(disc_.size);
  for (Index i = 0; i < num_terms(); ++i) {
    for (auto [row, c] : b_entries_[i]) b[row] += gamma[i] * c;
  }
  return b;
}

Eigen::VectorXd TransportLibrary::apply(const Eigen::VectorXd& gamma, const Eigen::VectorXd& e,
                                        double u) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(disc_.size);
  for (Index i = 0; i < num_terms(); ++i) {
    const double g = gamma[i];
    if (g == 0.0) continue;
    for (const Triplet& t : a_entries_[i]) out[t.row()] += g * t.value() * e[t.col()];
    for (auto [row, c] : b_entries_[i]) out[row] += g * c * u;
  }
  return out;
}

SparseMatrix TransportLibrary::term_columns(const Eigen::VectorXd& e, double u) const {
  std::vector<Triplet> all;
  for (Index i = 0; i < num_terms(); ++i) {
    for (const Triplet& t : a_entries_[i]) all.emplace_back(t.row(), i, t.value() * e[t.col()]);
    for (auto [row, c] : b_entries_[i]) all.emplace_back(row, i, c * u);
  }
  SparseMatrix cols(disc_.size, num_terms());
  cols.setFromTriplets(all.begin(), all.end());
  return cols;
}

UpwindOperator assemble_upwind(const Network& net, const Discretization& disc,
                               const Eigen::VectorXd& q, double q_source) {
  const Index n = disc.size;
  const Index np = net.num_pipes();
  std::vector<double> inflow(net.num_nodes(), 0.0);
  for (Index p = 0; p < np; ++p) {
    if (q[p] > kZeroFlow) inflow[net.pipe_to(p)] += q[p];
    else if (q[p] < -kZeroFlow) inflow[net.pipe_from(p)] += -q[p];
  }
  const Index s = net.source_node();
  if (q_source > kZeroFlow) inflow[s] += q_source;

  std::vector<Triplet> entries;
  UpwindOperator op;
  op.b = Eigen::VectorXd::Zero(n);
  for (Index p = 0; p < np; ++p) {
    const double flow = std::abs(q[p]);
    if (!(flow > kZeroFlow)) continue;
    const double rate = flow / disc.cell_volume[p];
    const bool forward = q[p] > 0.0;
    const Index count = disc.cells[p];
    for (Index k = 0; k < count; ++k) {
      // k counts cells in flow direction.
      const Index j = forward ? k : count - 1 - k;
      const Index row = disc.cell(p, j);
      entries.emplace_back(row, row, -rate);
      if (k > 0) {
        entries.emplace_back(row, disc.cell(p, forward ? j - 1 : j + 1), rate);
        continue;
      }
      // First cell downstream of the upstream node takes the node's mix.
      const Index node = forward ? net.pipe_from(p) : net.pipe_to(p);
      if (!(inflow[node] > kZeroFlow)) continue;
      for (Index beta : net.incident_pipes(node)) {
        if (beta == p) continue;
        const bool feeds = (q[beta] > kZeroFlow && net.pipe_to(beta) == node) ||
                           (q[beta] < -kZeroFlow && net.pipe_from(beta) == node);
        if (!feeds) continue;
        entries.emplace_back(row, disc.end_cell(beta, node), rate * std::abs(q[beta]) / inflow[node]);
      }
      if (node == s && q_source > kZeroFlow) op.b[row] += rate * q_source / inflow[node];
    }
  }
  op.a.resize(n, n);
  op.a.setFromTriplets(entries.begin(), entries.end());
  return op;
}

Eigen::VectorXd mixed_node_values(const Network& net, const Discretization& disc,
                                  const Eigen::VectorXd& q, double q_source,
                                  const Eigen::VectorXd& e, double u, double idle) {
  const Index nn = net.num_nodes();
  Eigen::VectorXd flux = Eigen::VectorXd::Zero(nn);
  Eigen::VectorXd total = Eigen::VectorXd::Zero(nn);
  for (Index p = 0; p < net.num_pipes(); ++p) {
    if (q[p] > kZeroFlow) {
      const Index node = net.pipe_to(p);
      total[node] += q[p];
      flux[node] += q[p] * e[disc.end_cell(p, node)];
    } else if (q[p] < -kZeroFlow) {
      const Index node = net.pipe_from(p);
      total[node] -= q[p];
      flux[node] -= q[p] * e[disc.end_cell(p, node)];
    }
  }
  const Index s = net.source_node();
  if (q_source > kZeroFlow) {
    total[s] += q_source;
    flux[s] += q_source * u;
  }
  Eigen::VectorXd mix(nn);
  for (Index node = 0; node < nn; ++node) {
    mix[node] = total[node] > kZeroFlow ? flux[node] / total[node] : idle;
  }
  return mix;
}

SparseMatrix output_map(const Network& net, const Discretization& disc) {
  std::vector<Triplet> entries;
  for (Index c = 0; c < net.num_consumers(); ++c) {
    const Index pipe = net.feed_pipe(c);
    if (pipe < 0) {
      throw InputError("consumer '" + net.consumers()[c].id +
                       "' sits on the source node and has no feed pipe");
    }
    entries.emplace_back(c, disc.end_cell(pipe, net.consumer_node(c)), 1.0);
  }
  SparseMatrix out(net.num_consumers(), disc.size);
  out.setFromTriplets(entries.begin(), entries.end());
  return out;
}

}  // namespace heatnet
