#pragma once

#include <algorithm>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "fjres/analysis.hpp"
#include "fjres/dynamics.hpp"
#include "fjres/graphs.hpp"

namespace fjres::test {

// Node 1 regular, node 2 misbehaving, W° = [[0,1],[1,0]].
inline Network two_node() {
  return mark_misbehaving(Network::from_edges(2, {make_edge(0, 1)}), {2});
}

inline Network cycle(int n) {
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) edges.push_back(make_edge(i, (i + 1) % n));
  return Network::from_edges(n, edges);
}

inline Network path(int n) {
  std::vector<Edge> edges;
  for (int i = 0; i + 1 < n; ++i) edges.push_back(make_edge(i, i + 1));
  return Network::from_edges(n, edges);
}

inline Network star(int n) {
  std::vector<Edge> edges;
  for (int i = 1; i < n; ++i) edges.push_back(make_edge(0, i));
  return Network::from_edges(n, edges);
}

// Connected ER graph with `m` random misbehaving nodes.
inline Network random_instance(std::uint64_t seed, int n, int m, double p = 0.3) {
  Network net = generate(GraphSpec::erdos_renyi(n, p, seed));
  Rng rng = make_rng(seed, 99);
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) labels[i] = i + 1;
  std::shuffle(labels.begin(), labels.end(), rng);
  labels.resize(m);
  return m > 0 ? mark_misbehaving(net, labels) : net;
}

// Random SPD matrix with a dominant diagonal.
inline Eigen::MatrixXd random_spd(int n, Rng& rng, double coupling = 0.3) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b(i, j) = g(rng);
  return coupling * b * b.transpose() / n + Eigen::MatrixXd::Identity(n, n);
}

inline Eigen::MatrixXd random_psd(int n, Rng& rng, double scale) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b(i, j) = g(rng);
  return scale * b * b.transpose() / n;
}

inline double max_abs(const Eigen::MatrixXd& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

}  // namespace fjres::test
