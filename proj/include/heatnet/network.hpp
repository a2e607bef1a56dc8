#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace heatnet {

using Index = std::ptrdiff_t;

struct Node {
  std::string id;
  double z = 0.0;  // elevation, m
};

struct Pipe {
  std::string id;
  std::string from;
  std::string to;
  double length = 0.0;     // m
  double diameter = 0.0;   // m
  double roughness = 0.0;  // m
  double friction = 0.0;   // Darcy factor, set by initialize_friction()

  double area() const;
  // lambda rho l / (2 d); multiplies |v| v in the Darcy-Weisbach loss.
  double resistance(double density) const;
};

struct Consumer {
  std::string id;
  std::string node;
  int class_id = 0;
  double daily_energy = 0.0;  // J/day
};

struct SourceEdge {
  std::string node;
};

// A pipe traversed along (+1) or against (-1) its reference direction.
struct SignedEdge {
  Index pipe = -1;
  int sign = 1;

  friend bool operator==(const SignedEdge&, const SignedEdge&) = default;
};

using EdgePath = std::vector<SignedEdge>;

// Supply-side pipe graph. Reference orientation of each pipe follows the
// from/to fields; a negative velocity encodes flow against it.
//
// The spanning tree is built by breadth-first search from the source node,
// visiting incident pipes in file order, so the loop basis is reproducible.
class Network {
 public:
  Network(std::vector<Node> nodes, std::vector<Pipe> pipes,
          std::vector<Consumer> consumers, SourceEdge source);

  static Network from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Pipe>& pipes() const { return pipes_; }
  const std::vector<Consumer>& consumers() const { return consumers_; }

  Index num_nodes() const { return static_cast<Index>(nodes_.size()); }
  Index num_pipes() const { return static_cast<Index>(pipes_.size()); }
  Index num_consumers() const { return static_cast<Index>(consumers_.size()); }
  Index num_loops() const { return num_pipes() - num_nodes() + 1; }

  Index source_node() const { return source_; }
  Index node_index(const std::string& id) const;
  Index pipe_index(const std::string& id) const;
  Index consumer_index(const std::string& id) const;

  Index pipe_from(Index p) const { return from_[p]; }
  Index pipe_to(Index p) const { return to_[p]; }
  Index consumer_node(Index c) const { return consumer_node_[c]; }
  const std::vector<Index>& incident_pipes(Index node) const { return incident_[node]; }

  // Tree edge linking `node` to its parent (-1 for the source).
  Index tree_parent_pipe(Index node) const { return parent_pipe_[node]; }
  Index tree_parent_node(Index node) const { return parent_node_[node]; }
  const std::vector<Index>& chords() const { return chords_; }
  bool is_tree_pipe(Index p) const { return in_tree_[p]; }

  // Oriented tree path between two nodes.
  EdgePath tree_path(Index from_node, Index to_node) const;

  // Pipe through which a consumer is supplied (its tree parent edge); -1 when
  // the consumer sits on the source node.
  Index feed_pipe(Index consumer) const;

  double total_length() const;

  void set_friction(Index p, double lambda) { pipes_[p].friction = lambda; }

 private:
  void validate_and_index();

  std::vector<Node> nodes_;
  std::vector<Pipe> pipes_;
  std::vector<Consumer> consumers_;
  Index source_ = -1;

  std::unordered_map<std::string, Index> node_ids_;
  std::unordered_map<std::string, Index> pipe_ids_;
  std::unordered_map<std::string, Index> consumer_ids_;
  std::vector<Index> from_;
  std::vector<Index> to_;
  std::vector<Index> consumer_node_;
  std::vector<std::vector<Index>> incident_;
  std::vector<Index> parent_pipe_;
  std::vector<Index> parent_node_;
  std::vector<Index> depth_;
  std::vector<bool> in_tree_;
  std::vector<Index> chords_;
};

Network load_network(const std::filesystem::path& path);

// One signed cycle per chord of the spanning tree: the chord along its
// reference direction followed by the tree path closing it.
std::vector<EdgePath> fundamental_loops(const Network& net);

// Source-to-consumer path along the spanning tree. Empty when the consumer is
// attached to the source node.
EdgePath path_to_consumer(const Network& net, Index consumer);

}  // namespace heatnet
