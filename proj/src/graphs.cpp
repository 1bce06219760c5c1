#include "fjres/graphs.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "fjres/error.hpp"

namespace fjres {

std::string to_string(GraphKind kind) {
  switch (kind) {
    case GraphKind::KRegular: return "k_regular";
    case GraphKind::ErdosRenyi: return "erdos_renyi";
    case GraphKind::Geometric: return "geometric";
    case GraphKind::Explicit: return "explicit";
  }
  return "explicit";
}

GraphKind graph_kind_from_string(const std::string& name) {
  if (name == "k_regular") return GraphKind::KRegular;
  if (name == "erdos_renyi") return GraphKind::ErdosRenyi;
  if (name == "geometric") return GraphKind::Geometric;
  if (name == "explicit") return GraphKind::Explicit;
  throw InvalidArgument("unknown graph kind '" + name + "'");
}

GraphSpec GraphSpec::k_regular(int n, int degree, std::uint64_t seed) {
  GraphSpec s;
  s.kind = GraphKind::KRegular;
  s.n = n;
  s.degree = degree;
  s.seed = seed;
  return s;
}

GraphSpec GraphSpec::erdos_renyi(int n, double p, std::uint64_t seed) {
  GraphSpec s;
  s.kind = GraphKind::ErdosRenyi;
  s.n = n;
  s.p = p;
  s.seed = seed;
  return s;
}

GraphSpec GraphSpec::geometric(int n, double radius, std::uint64_t seed) {
  GraphSpec s;
  s.kind = GraphKind::Geometric;
  s.n = n;
  s.radius = radius;
  s.seed = seed;
  return s;
}

GraphSpec GraphSpec::explicit_edges(int n, std::vector<std::pair<int, int>> edges) {
  GraphSpec s;
  s.kind = GraphKind::Explicit;
  s.n = n;
  s.edges = std::move(edges);
  return s;
}

void GraphSpec::validate() const {
  if (n < 2) throw InvalidArgument("graph needs at least 2 nodes");
  switch (kind) {
    case GraphKind::KRegular:
      if (degree < 1 || degree >= n) throw InvalidArgument("k_regular: degree must be in [1, n-1]");
      if ((static_cast<long>(degree) * n) % 2 != 0) {
        throw InvalidArgument("k_regular: degree * n must be even");
      }
      break;
    case GraphKind::ErdosRenyi:
      if (!(p > 0.0 && p <= 1.0)) throw InvalidArgument("erdos_renyi: p must be in (0, 1]");
      break;
    case GraphKind::Geometric:
      if (!(radius > 0.0 && radius <= std::sqrt(2.0))) {
        throw InvalidArgument("geometric: radius must be in (0, sqrt(2)]");
      }
      break;
    case GraphKind::Explicit:
      for (auto [a, b] : edges) {
        if (a < 1 || a > n || b < 1 || b > n) throw InvalidArgument("explicit: edge endpoint out of range");
        if (a == b) throw InvalidArgument("explicit: self-loops are not allowed");
      }
      break;
  }
}

// ---------------------------------------------------------------- Network

Network Network::from_edges(int n, const std::vector<Edge>& edges) {
  if (n < 1) throw InvalidArgument("network needs at least one node");
  Network net;
  net.adj_.assign(n, {});
  std::set<Edge> seen;
  for (Edge e : edges) {
    e = make_edge(e.u, e.v);
    if (e.u < 0 || e.v >= n) throw InvalidArgument("edge endpoint out of range");
    if (e.u == e.v) throw InvalidArgument("self-loops are not allowed");
    if (!seen.insert(e).second) continue;
    net.adj_[e.u].push_back(e.v);
    net.adj_[e.v].push_back(e.u);
  }
  for (auto& nb : net.adj_) std::sort(nb.begin(), nb.end());
  net.labels_.resize(n);
  for (int i = 0; i < n; ++i) net.labels_[i] = i + 1;
  net.regular_ = n;
  net.rebuild_weights();
  return net;
}

void Network::rebuild_weights() {
  const int n = size();
  w_ = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    if (adj_[i].empty()) {
      throw InvalidArgument("node " + std::to_string(labels_.empty() ? i + 1 : labels_[i]) +
                            " has no neighbors; uniform weights undefined");
    }
    const double w = 1.0 / static_cast<double>(adj_[i].size());
    for (int j : adj_[i]) w_(i, j) = w;
  }
}

bool Network::has_edge(int i, int j) const {
  const auto& nb = adj_[i];
  return std::binary_search(nb.begin(), nb.end(), j);
}

std::vector<Edge> Network::edges() const {
  std::vector<Edge> out;
  for (int i = 0; i < size(); ++i) {
    for (int j : adj_[i]) {
      if (i < j) out.push_back({i, j});
    }
  }
  return out;
}

std::size_t Network::edge_count() const {
  std::size_t total = 0;
  for (const auto& nb : adj_) total += nb.size();
  return total / 2;
}

namespace {

bool connected_adjacency(const std::vector<std::vector<int>>& adj) {
  const int n = static_cast<int>(adj.size());
  if (n == 0) return true;
  std::vector<char> seen(n, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    int i = stack.back();
    stack.pop_back();
    for (int j : adj[i]) {
      if (!seen[j]) {
        seen[j] = 1;
        ++count;
        stack.push_back(j);
      }
    }
  }
  return count == n;
}

std::vector<std::vector<int>> adjacency_of(int n, const std::vector<Edge>& edges) {
  std::vector<std::vector<int>> adj(n);
  for (Edge e : edges) {
    adj[e.u].push_back(e.v);
    adj[e.v].push_back(e.u);
  }
  return adj;
}

}  // namespace

bool Network::connected() const { return connected_adjacency(adj_); }

int Network::index_of(int label) const {
  for (int i = 0; i < size(); ++i) {
    if (labels_[i] == label) return i;
  }
  throw InvalidArgument("unknown node label " + std::to_string(label));
}

std::vector<int> Network::misbehaving_labels() const {
  return {labels_.begin() + regular_, labels_.end()};
}

std::map<int, int> Network::degree_histogram() const {
  std::map<int, int> hist;
  for (const auto& nb : adj_) ++hist[static_cast<int>(nb.size())];
  return hist;
}

// ---------------------------------------------------------------- generators

std::optional<std::vector<Edge>> sample_k_regular_edges(int n, int degree, Rng& rng) {
  // Stub pairing: shuffle the stubs, pair them, keep simple edges and re-pair the
  // leftovers; restart when no valid pair can remain.
  std::set<Edge> edges;
  std::vector<int> stubs;
  stubs.reserve(static_cast<std::size_t>(n) * degree);
  for (int d = 0; d < degree; ++d) {
    for (int i = 0; i < n; ++i) stubs.push_back(i);
  }
  while (!stubs.empty()) {
    std::shuffle(stubs.begin(), stubs.end(), rng);
    std::map<int, int> leftover;
    for (std::size_t k = 0; k + 1 < stubs.size(); k += 2) {
      int a = stubs[k];
      int b = stubs[k + 1];
      if (a != b && !edges.count(make_edge(a, b))) {
        edges.insert(make_edge(a, b));
      } else {
        ++leftover[a];
        ++leftover[b];
      }
    }
    if (leftover.empty()) break;
    bool suitable = false;
    for (auto it = leftover.begin(); it != leftover.end() && !suitable; ++it) {
      for (auto jt = std::next(it); jt != leftover.end(); ++jt) {
        if (!edges.count(make_edge(it->first, jt->first))) {
          suitable = true;
          break;
        }
      }
    }
    if (!suitable) return std::nullopt;
    stubs.clear();
    for (auto [node, count] : leftover) {
      for (int c = 0; c < count; ++c) stubs.push_back(node);
    }
  }
  return std::vector<Edge>(edges.begin(), edges.end());
}

std::vector<Edge> sample_erdos_renyi_edges(int n, double p, Rng& rng) {
  std::bernoulli_distribution coin(p);
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (coin(rng)) edges.push_back({i, j});
    }
  }
  return edges;
}

std::vector<Edge> sample_geometric_edges(int n, double radius, Rng& rng,
                                         std::vector<Eigen::Vector2d>* positions) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Eigen::Vector2d> pos(n);
  for (auto& p : pos) {
    const double x = unit(rng);
    const double y = unit(rng);
    p = {x, y};
  }
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if ((pos[i] - pos[j]).norm() <= radius) edges.push_back({i, j});
    }
  }
  if (positions) *positions = std::move(pos);
  return edges;
}

Network generate(const GraphSpec& spec) {
  spec.validate();
  const int n = spec.n;

  if (spec.kind == GraphKind::Explicit) {
    std::vector<Edge> edges;
    for (auto [a, b] : spec.edges) edges.push_back(make_edge(a - 1, b - 1));
    if (!connected_adjacency(adjacency_of(n, edges))) {
      throw InvalidArgument("explicit graph is not connected");
    }
    Network net = Network::from_edges(n, edges);
    net.kind_ = GraphKind::Explicit;
    net.seed_ = spec.seed;
    return net;
  }

  for (int attempt = 0; attempt < kMaxConnectivityAttempts; ++attempt) {
    Rng rng = make_rng(spec.seed, static_cast<std::uint64_t>(attempt));
    std::vector<Edge> edges;
    std::vector<Eigen::Vector2d> positions;
    switch (spec.kind) {
      case GraphKind::KRegular: {
        auto sampled = sample_k_regular_edges(n, spec.degree, rng);
        if (!sampled) continue;
        edges = std::move(*sampled);
        break;
      }
      case GraphKind::ErdosRenyi:
        edges = sample_erdos_renyi_edges(n, spec.p, rng);
        break;
      case GraphKind::Geometric:
        edges = sample_geometric_edges(n, spec.radius, rng, &positions);
        break;
      case GraphKind::Explicit:
        break;
    }
    if (!connected_adjacency(adjacency_of(n, edges))) continue;
    Network net = Network::from_edges(n, edges);
    net.kind_ = spec.kind;
    net.seed_ = spec.seed;
    net.positions_ = std::move(positions);
    return net;
  }
  throw InvalidArgument("could not sample a connected " + to_string(spec.kind) + " graph within " +
                        std::to_string(kMaxConnectivityAttempts) + " attempts");
}

// ---------------------------------------------------------------- editing

Network mark_misbehaving(const Network& net, const std::vector<int>& ids) {
  const int n = net.size();
  std::set<int> bad;
  for (int id : ids) {
    net.index_of(id);  // validates the label
    bad.insert(id);
  }
  if (static_cast<int>(bad.size()) >= n) {
    throw InvalidArgument("mark_misbehaving: at least one regular node is required");
  }
  // Current role of each internal slot, by external label.
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  const int regular = n - static_cast<int>(bad.size());

  std::vector<int> head_bad;   // misbehaving in [0, R)
  std::vector<int> tail_good;  // regular in [R, N)
  for (int i = 0; i < n; ++i) {
    const bool is_bad = bad.count(net.label(i)) > 0;
    if (i < regular && is_bad) head_bad.push_back(i);
    if (i >= regular && !is_bad) tail_good.push_back(i);
  }
  for (std::size_t k = 0; k < head_bad.size(); ++k) std::swap(order[head_bad[k]], order[tail_good[k]]);

  // order[new] = old
  std::vector<int> inv(n);
  for (int i = 0; i < n; ++i) inv[order[i]] = i;

  Network out;
  out.adj_.assign(n, {});
  out.labels_.resize(n);
  for (int i = 0; i < n; ++i) {
    const int old = order[i];
    out.labels_[i] = net.labels_[old];
    for (int j : net.adj_[old]) out.adj_[i].push_back(inv[j]);
    std::sort(out.adj_[i].begin(), out.adj_[i].end());
  }
  if (!net.positions_.empty()) {
    out.positions_.resize(n);
    for (int i = 0; i < n; ++i) out.positions_[i] = net.positions_[order[i]];
  }
  out.w_.resize(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) out.w_(i, j) = net.w_(order[i], order[j]);
  }
  out.regular_ = regular;
  out.kind_ = net.kind_;
  out.seed_ = net.seed_;
  return out;
}

Eigen::MatrixXi shortest_path_lengths(const Network& net) {
  const int n = net.size();
  Eigen::MatrixXi dist = Eigen::MatrixXi::Constant(n, n, -1);
  std::vector<int> queue(n);
  for (int s = 0; s < n; ++s) {
    int head = 0;
    int tail = 0;
    queue[tail++] = s;
    dist(s, s) = 0;
    while (head < tail) {
      int i = queue[head++];
      for (int j : net.neighbors(i)) {
        if (dist(s, j) < 0) {
          dist(s, j) = dist(s, i) + 1;
          queue[tail++] = j;
        }
      }
    }
    if (tail != n) throw InvalidArgument("shortest_path_lengths: graph is disconnected");
  }
  return dist;
}

Network remove_edges_unchecked(const Network& net, const std::vector<Edge>& edges) {
  Network out = net;
  for (Edge e : edges) {
    e = make_edge(e.u, e.v);
    if (e.u < 0 || e.v >= net.size() || !out.has_edge(e.u, e.v)) {
      throw InvalidArgument("remove_edge: edge does not exist");
    }
    auto& a = out.adj_[e.u];
    a.erase(std::lower_bound(a.begin(), a.end(), e.v));
    auto& b = out.adj_[e.v];
    b.erase(std::lower_bound(b.begin(), b.end(), e.u));
  }
  out.rebuild_weights();
  return out;
}

Network remove_edge(const Network& net, Edge e) {
  e = make_edge(e.u, e.v);
  if (e.u < 0 || e.v >= net.size() || !net.has_edge(e.u, e.v)) {
    throw InvalidArgument("remove_edge: edge does not exist");
  }
  auto adj = net.adj_;
  std::erase(adj[e.u], e.v);
  std::erase(adj[e.v], e.u);
  if (!connected_adjacency(adj)) throw InvalidArgument("remove_edge: removal disconnects the graph");
  return remove_edges_unchecked(net, {e});
}

Network perfect_matching_removal(const Network& net) {
  auto matching = perfect_matching(net);
  if (!matching) throw InvalidArgument("perfect_matching_removal: no perfect matching exists");
  return remove_edges_unchecked(net, *matching);
}

}  // namespace fjres
