#include <algorithm>
#include <numeric>
#include <vector>

#include "fjres/graphs.hpp"

namespace fjres {

namespace {

// Edmonds' blossom algorithm, O(V^3): grow alternating trees by BFS from each
// free vertex, contracting odd cycles through the `base` array.
class BlossomMatcher {
public:
  explicit BlossomMatcher(const Network& net)
      : net_(net), n_(net.size()), mate_(n_, -1), parent_(n_), base_(n_), used_(n_), blossom_(n_) {}

  std::vector<int> run() {
    // Greedy warm start keeps the number of augmentations small.
    for (int v = 0; v < n_; ++v) {
      if (mate_[v] != -1) continue;
      for (int u : net_.neighbors(v)) {
        if (mate_[u] == -1) {
          mate_[u] = v;
          mate_[v] = u;
          break;
        }
      }
    }
    for (int v = 0; v < n_; ++v) {
      if (mate_[v] != -1) continue;
      int end = find_path(v);
      while (end != -1) {
        int pv = parent_[end];
        int ppv = mate_[pv];
        mate_[end] = pv;
        mate_[pv] = end;
        end = ppv;
      }
    }
    return mate_;
  }

private:
  int lca(int a, int b) {
    std::vector<char> seen(n_, 0);
    for (;;) {
      a = base_[a];
      seen[a] = 1;
      if (mate_[a] == -1) break;
      a = parent_[mate_[a]];
    }
    for (;;) {
      b = base_[b];
      if (seen[b]) return b;
      b = parent_[mate_[b]];
    }
  }

  void mark_path(int v, int b, int child) {
    while (base_[v] != b) {
      blossom_[base_[v]] = blossom_[base_[mate_[v]]] = 1;
      parent_[v] = child;
      child = mate_[v];
      v = parent_[mate_[v]];
    }
  }

  int find_path(int root) {
    std::fill(used_.begin(), used_.end(), 0);
    std::fill(parent_.begin(), parent_.end(), -1);
    std::iota(base_.begin(), base_.end(), 0);
    used_[root] = 1;
    std::vector<int> queue{root};
    for (std::size_t head = 0; head < queue.size(); ++head) {
      int v = queue[head];
      for (int to : net_.neighbors(v)) {
        if (base_[v] == base_[to] || mate_[v] == to) continue;
        if (to == root || (mate_[to] != -1 && parent_[mate_[to]] != -1)) {
          int cur = lca(v, to);
          std::fill(blossom_.begin(), blossom_.end(), 0);
          mark_path(v, cur, to);
          mark_path(to, cur, v);
          for (int i = 0; i < n_; ++i) {
            if (blossom_[base_[i]]) {
              base_[i] = cur;
              if (!used_[i]) {
                used_[i] = 1;
                queue.push_back(i);
              }
            }
          }
        } else if (parent_[to] == -1) {
          parent_[to] = v;
          if (mate_[to] == -1) return to;
          used_[mate_[to]] = 1;
          queue.push_back(mate_[to]);
        }
      }
    }
    return -1;
  }

  const Network& net_;
  int n_;
  std::vector<int> mate_, parent_, base_;
  std::vector<char> used_, blossom_;
};

}  // namespace

std::vector<int> maximum_matching(const Network& net) { return BlossomMatcher(net).run(); }

std::optional<std::vector<Edge>> perfect_matching(const Network& net) {
  if (net.size() % 2 != 0) return std::nullopt;
  std::vector<int> mate = maximum_matching(net);
  std::vector<Edge> out;
  for (int v = 0; v < net.size(); ++v) {
    if (mate[v] == -1) return std::nullopt;
    if (v < mate[v]) out.push_back({v, mate[v]});
  }
  return out;
}

}  // namespace fjres
