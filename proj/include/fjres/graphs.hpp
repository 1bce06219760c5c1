#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fjres/rng.hpp"

namespace fjres {

/// Undirected edge between internal (0-based) node indices, stored with u < v.
struct Edge {
  int u = 0;
  int v = 0;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

inline Edge make_edge(int a, int b) { return a < b ? Edge{a, b} : Edge{b, a}; }

enum class GraphKind { KRegular, ErdosRenyi, Geometric, Explicit };

std::string to_string(GraphKind kind);
GraphKind graph_kind_from_string(const std::string& name);

struct GraphSpec {
  GraphKind kind = GraphKind::KRegular;
  int n = 0;
  int degree = 0;        // k_regular
  double p = 0.0;        // erdos_renyi
  double radius = 0.0;   // geometric
  std::vector<std::pair<int, int>> edges;  // explicit, 1-based
  std::uint64_t seed = 0;

  static GraphSpec k_regular(int n, int degree, std::uint64_t seed);
  static GraphSpec erdos_renyi(int n, double p, std::uint64_t seed);
  static GraphSpec geometric(int n, double radius, std::uint64_t seed);
  static GraphSpec explicit_edges(int n, std::vector<std::pair<int, int>> edges);

  void validate() const;
};

/// Communication network with nominal uniform weights and a regular/misbehaving
/// partition. Internally regular nodes occupy indices [0, R) and misbehaving
/// nodes [R, N); `label(i)` gives the 1-based external id of internal node i.
class Network {
public:
  Network() = default;

  /// Builds an all-regular network with uniform weights 1/deg(i). Every node
  /// needs at least one neighbor; connectivity is not required here.
  static Network from_edges(int n, const std::vector<Edge>& edges);

  int size() const { return static_cast<int>(adj_.size()); }
  int regular_count() const { return regular_; }
  int misbehaving_count() const { return size() - regular_; }

  const std::vector<int>& neighbors(int i) const { return adj_[i]; }
  int degree(int i) const { return static_cast<int>(adj_[i].size()); }
  bool has_edge(int i, int j) const;
  std::vector<Edge> edges() const;
  std::size_t edge_count() const;
  bool connected() const;

  /// Nominal row-stochastic weights W°.
  const Eigen::MatrixXd& weights() const { return w_; }
  Eigen::MatrixXd regular_block() const { return w_.topLeftCorner(regular_, regular_); }
  Eigen::MatrixXd misbehaving_block() const {
    return w_.topRightCorner(regular_, size() - regular_);
  }

  int label(int i) const { return labels_[i]; }
  const std::vector<int>& labels() const { return labels_; }
  /// Internal index of an external 1-based label.
  int index_of(int label) const;
  /// External labels of the misbehaving nodes, in internal order.
  std::vector<int> misbehaving_labels() const;

  /// Node positions in [0,1]² (geometric graphs only, internal order).
  const std::vector<Eigen::Vector2d>& positions() const { return positions_; }

  GraphKind kind() const { return kind_; }
  std::uint64_t seed() const { return seed_; }

  /// Degree histogram as degree -> node count.
  std::map<int, int> degree_histogram() const;

private:
  friend Network generate(const GraphSpec&);
  friend Network mark_misbehaving(const Network&, const std::vector<int>&);
  friend Network remove_edge(const Network&, Edge);
  friend Network perfect_matching_removal(const Network&);
  friend Network remove_edges_unchecked(const Network&, const std::vector<Edge>&);

  void rebuild_weights();

  std::vector<std::vector<int>> adj_;
  Eigen::MatrixXd w_;
  std::vector<int> labels_;
  std::vector<Eigen::Vector2d> positions_;
  int regular_ = 0;
  GraphKind kind_ = GraphKind::Explicit;
  std::uint64_t seed_ = 0;
};

inline constexpr int kMaxConnectivityAttempts = 1000;

/// Samples a connected graph from `spec`, retrying with derived sub-seeds.
Network generate(const GraphSpec& spec);

// Raw samplers (one attempt, no connectivity check), exposed for statistics tests.
std::optional<std::vector<Edge>> sample_k_regular_edges(int n, int degree, Rng& rng);
std::vector<Edge> sample_erdos_renyi_edges(int n, double p, Rng& rng);
std::vector<Edge> sample_geometric_edges(int n, double radius, Rng& rng,
                                         std::vector<Eigen::Vector2d>* positions);

/// Marks the given external (1-based) ids as misbehaving and relabels so that
/// regular nodes come first. Misbehaving nodes found among the first R slots
/// are swapped with regular nodes in the tail, both taken in ascending order.
Network mark_misbehaving(const Network& net, const std::vector<int>& ids);

/// All-pairs hop distances by BFS. Throws if the graph is disconnected.
Eigen::MatrixXi shortest_path_lengths(const Network& net);

/// Removes an edge and re-weighs uniformly. Throws if the edge is absent or
/// its removal disconnects the graph.
Network remove_edge(const Network& net, Edge e);

/// Removes edges without connectivity checks (used by matching removal).
Network remove_edges_unchecked(const Network& net, const std::vector<Edge>& edges);

/// Maximum cardinality matching on a general graph (Edmonds' blossom algorithm).
/// Returns mate[i] or -1.
std::vector<int> maximum_matching(const Network& net);

/// Perfect matching if one exists.
std::optional<std::vector<Edge>> perfect_matching(const Network& net);

/// Drops a perfect matching from a regular graph, lowering every degree by one.
/// Throws InvalidArgument when no perfect matching exists. The result may be
/// disconnected.
Network perfect_matching_removal(const Network& net);

// Edge-list file format: one JSON header line prefixed by "# ", then "u v" per
// line using 1-based external labels.
void write_edge_list(const Network& net, std::ostream& out);
Network read_edge_list(std::istream& in);

}  // namespace fjres
