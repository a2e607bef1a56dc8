#include "heatnet/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <queue>
#include <sstream>

#include "heatnet/errors.hpp"

namespace heatnet {

double Pipe::area() const { return std::numbers::pi * diameter * diameter / 4.0; }

double Pipe::resistance(double density) const {
  return friction * density * length / (2.0 * diameter);
}

Network::Network(std::vector<Node> nodes, std::vector<Pipe> pipes,
                 std::vector<Consumer> consumers, SourceEdge source)
    : nodes_(std::move(nodes)), pipes_(std::move(pipes)), consumers_(std::move(consumers)) {
  node_ids_.reserve(nodes_.size());
  for (Index i = 0; i < num_nodes(); ++i) {
    if (!node_ids_.emplace(nodes_[i].id, i).second) {
      throw InputError("duplicate node id '" + nodes_[i].id + "'");
    }
  }
  auto it = node_ids_.find(source.node);
  if (it == node_ids_.end()) {
    throw InputError("source node '" + source.node + "' does not exist");
  }
  source_ = it->second;
  validate_and_index();
}

void Network::validate_and_index() {
  if (nodes_.empty()) throw InputError("network has no nodes");

  from_.resize(pipes_.size());
  to_.resize(pipes_.size());
  incident_.assign(nodes_.size(), {});
  for (Index p = 0; p < num_pipes(); ++p) {
    const Pipe& pipe = pipes_[p];
    if (!pipe_ids_.emplace(pipe.id, p).second) {
      throw InputError("duplicate pipe id '" + pipe.id + "'");
    }
    auto f = node_ids_.find(pipe.from);
    auto t = node_ids_.find(pipe.to);
    if (f == node_ids_.end() || t == node_ids_.end()) {
      throw InputError("pipe '" + pipe.id + "' references an unknown node");
    }
    if (f->second == t->second) {
      throw InputError("pipe '" + pipe.id + "' starts and ends at the same node");
    }
    if (!(pipe.length > 0.0) || !std::isfinite(pipe.length)) {
      throw InputError("pipe '" + pipe.id + "' has nonpositive length");
    }
    if (!(pipe.diameter > 0.0) || !std::isfinite(pipe.diameter)) {
      throw InputError("pipe '" + pipe.id + "' has nonpositive diameter");
    }
    if (!(pipe.roughness >= 0.0)) {
      throw InputError("pipe '" + pipe.id + "' has negative roughness");
    }
    from_[p] = f->second;
    to_[p] = t->second;
    incident_[f->second].push_back(p);
    incident_[t->second].push_back(p);
  }

  consumer_node_.resize(consumers_.size());
  for (Index c = 0; c < num_consumers(); ++c) {
    const Consumer& con = consumers_[c];
    if (!consumer_ids_.emplace(con.id, c).second) {
      throw InputError("duplicate consumer id '" + con.id + "'");
    }
    auto n = node_ids_.find(con.node);
    if (n == node_ids_.end()) {
      throw InputError("consumer '" + con.id + "' references unknown node '" + con.node + "'");
    }
    if (!(con.daily_energy > 0.0)) {
      throw InputError("consumer '" + con.id + "' has nonpositive daily energy");
    }
    consumer_node_[c] = n->second;
  }

  // Breadth-first spanning tree from the source.
  parent_pipe_.assign(nodes_.size(), -1);
  parent_node_.assign(nodes_.size(), -1);
  depth_.assign(nodes_.size(), -1);
  in_tree_.assign(pipes_.size(), false);
  std::queue<Index> queue;
  depth_[source_] = 0;
  queue.push(source_);
  while (!queue.empty()) {
    Index n = queue.front();
    queue.pop();
    for (Index p : incident_[n]) {
      Index other = from_[p] == n ? to_[p] : from_[p];
      if (depth_[other] >= 0) continue;
      depth_[other] = depth_[n] + 1;
      parent_pipe_[other] = p;
      parent_node_[other] = n;
      in_tree_[p] = true;
      queue.push(other);
    }
  }
  for (Index n = 0; n < num_nodes(); ++n) {
    if (depth_[n] < 0) {
      throw InputError("network is disconnected: node '" + nodes_[n].id +
                       "' is not reachable from the source");
    }
  }
  chords_.clear();
  for (Index p = 0; p < num_pipes(); ++p) {
    if (!in_tree_[p]) chords_.push_back(p);
  }
}

Index Network::node_index(const std::string& id) const {
  auto it = node_ids_.find(id);
  if (it == node_ids_.end()) throw InputError("unknown node '" + id + "'");
  return it->second;
}

Index Network::pipe_index(const std::string& id) const {
  auto it = pipe_ids_.find(id);
  if (it == pipe_ids_.end()) throw InputError("unknown pipe '" + id + "'");
  return it->second;
}

Index Network::consumer_index(const std::string& id) const {
  auto it = consumer_ids_.find(id);
  if (it == consumer_ids_.end()) throw InputError("unknown consumer '" + id + "'");
  return it->second;
}

EdgePath Network::tree_path(Index from_node, Index to_node) const {
  // Climb from both ends to the lowest common ancestor.
  EdgePath up;
  EdgePath down;
  Index a = from_node;
  Index b = to_node;
  while (a != b) {
    if (depth_[a] >= depth_[b]) {
      Index p = parent_pipe_[a];
      // Moving from a to its parent.
      up.push_back({p, from_[p] == a ? 1 : -1});
      a = parent_node_[a];
    } else {
      Index p = parent_pipe_[b];
      // Moving from b's parent down to b.
      down.push_back({p, to_[p] == b ? 1 : -1});
      b = parent_node_[b];
    }
  }
  up.insert(up.end(), down.rbegin(), down.rend());
  return up;
}

Index Network::feed_pipe(Index consumer) const {
  return parent_pipe_[consumer_node_[consumer]];
}

double Network::total_length() const {
  double total = 0.0;
  for (const Pipe& p : pipes_) total += p.length;
  return total;
}

namespace {

template <typename T>
T required(const nlohmann::json& obj, const char* key, const char* what) {
  if (!obj.contains(key)) {
    throw InputError(std::string(what) + " entry is missing key '" + key + "'");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string(what) + " key '" + key + "': " + e.what());
  }
}

std::string id_string(const nlohmann::json& obj, const char* key, const char* what) {
  if (!obj.contains(key)) {
    throw InputError(std::string(what) + " entry is missing key '" + key + "'");
  }
  const auto& v = obj.at(key);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw InputError(std::string(what) + " key '" + key + "' must be a string or integer");
}

}  // namespace

Network Network::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw InputError("network document must be a JSON object");
  for (const char* key : {"nodes", "pipes", "consumers", "source"}) {
    if (!doc.contains(key)) throw InputError(std::string("network is missing '") + key + "'");
  }
  std::vector<Node> nodes;
  for (const auto& n : doc.at("nodes")) {
    nodes.push_back({id_string(n, "id", "node"), n.value("z_m", 0.0)});
  }
  std::vector<Pipe> pipes;
  for (const auto& p : doc.at("pipes")) {
    Pipe pipe;
    pipe.id = id_string(p, "id", "pipe");
    pipe.from = id_string(p, "from", "pipe");
    pipe.to = id_string(p, "to", "pipe");
    pipe.length = required<double>(p, "length_m", "pipe");
    pipe.diameter = required<double>(p, "diameter_m", "pipe");
    pipe.roughness = p.value("roughness_m", 0.0);
    pipes.push_back(std::move(pipe));
  }
  std::vector<Consumer> consumers;
  for (const auto& c : doc.at("consumers")) {
    Consumer con;
    con.id = id_string(c, "id", "consumer");
    con.node = id_string(c, "node", "consumer");
    con.class_id = c.value("class", 0);
    con.daily_energy = required<double>(c, "daily_energy_J", "consumer");
    consumers.push_back(std::move(con));
  }
  SourceEdge source{id_string(doc.at("source"), "node", "source")};
  return Network(std::move(nodes), std::move(pipes), std::move(consumers), std::move(source));
}

nlohmann::json Network::to_json() const {
  nlohmann::json doc;
  doc["nodes"] = nlohmann::json::array();
  for (const Node& n : nodes_) doc["nodes"].push_back({{"id", n.id}, {"z_m", n.z}});
  doc["pipes"] = nlohmann::json::array();
  for (const Pipe& p : pipes_) {
    doc["pipes"].push_back({{"id", p.id},
                            {"from", p.from},
                            {"to", p.to},
                            {"length_m", p.length},
                            {"diameter_m", p.diameter},
                            {"roughness_m", p.roughness}});
  }
  doc["consumers"] = nlohmann::json::array();
  for (const Consumer& c : consumers_) {
    doc["consumers"].push_back({{"id", c.id},
                                {"node", c.node},
                                {"class", c.class_id},
                                {"daily_energy_J", c.daily_energy}});
  }
  doc["source"] = {{"node", nodes_[source_].id}};
  return doc;
}

Network load_network(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open network file '" + path.string() + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError("network file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return Network::from_json(doc);
}

std::vector<EdgePath> fundamental_loops(const Network& net) {
  std::vector<EdgePath> loops;
  loops.reserve(net.chords().size());
  for (Index chord : net.chords()) {
    EdgePath loop{{chord, 1}};
    EdgePath closing = net.tree_path(net.pipe_to(chord), net.pipe_from(chord));
    loop.insert(loop.end(), closing.begin(), closing.end());
    loops.push_back(std::move(loop));
  }
  return loops;
}

EdgePath path_to_consumer(const Network& net, Index consumer) {
  if (consumer < 0 || consumer >= net.num_consumers()) {
    throw InputError("consumer index out of range");
  }
  return net.tree_path(net.source_node(), net.consumer_node(consumer));
}

}  // namespace heatnet
