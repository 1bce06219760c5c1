#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "fjres/dynamics.hpp"
#include "fjres/graphs.hpp"
#include "fjres/netdesign.hpp"

namespace fjres {

struct PriorConfig {
  PriorKind kind = PriorKind::Diagonal;
  double variance = 1.0;
  std::vector<double> variances;  // per node, overrides `variance`
  double base = 10.0;
  double rate = 0.2;
  Eigen::MatrixXd sigma;  // explicit

  PriorModel build(const Network& net) const;
};

struct MisbehaviorConfig {
  double d = 0.0;
  double q = 0.0;
  std::optional<Eigen::MatrixXd> v;  // overrides d
  std::optional<Eigen::MatrixXd> q_matrix;  // overrides q
  std::optional<std::vector<double>> fixed_bias;
  /// Fixed biases drawn once from U[lo, hi] under the experiment seed.
  std::optional<std::pair<double, double>> bias_range;

  MisbehaviorModel build(int m, std::uint64_t seed) const;
};

struct ProtocolConfig {
  bool auto_lambda = false;
  double lambda = 0.5;
  /// Design model behind "auto": V = design_v·I, Q = design_q·I.
  double design_v = 5.0;
  double design_q = 0.0;
  int trim = 1;
  std::vector<Protocol> protocols{Protocol::Consensus, Protocol::FJ, Protocol::WMSR, Protocol::SABA};
};

struct SweepConfig {
  std::string axis;  // lambda | d | q | M | density
  std::vector<double> values;
  GraphKind family = GraphKind::KRegular;
  int n = 100;
  AttackerPolicy policy = AttackerPolicy::WorstCase;
  int random_count = 5;
  int samples = 100;
};

struct ExperimentConfig {
  GraphSpec graph;
  std::optional<std::uint64_t> graph_seed;  // default: derived from `seed`
  std::optional<std::string> graph_file;
  std::vector<int> misbehaving_ids;
  int misbehaving_count = 0;  // random placement when ids are empty
  PriorConfig prior;
  MisbehaviorConfig misbehavior;
  ProtocolConfig protocol;
  std::optional<SweepConfig> sweep;
  DesignObjective objective;
  int lambda_resolution = 256;
  std::vector<double> lambdas;
  int horizon = 0;  // 0: derived from transient_tol
  double transient_tol = 1e-9;
  int trials = 200;
  double z_threshold = 4.0;
  int max_removals = -1;  // -1: until no feasible edge remains
  std::uint64_t seed = 1;
  std::optional<std::string> output;
};

/// Validates the document and fills defaults. Throws ConfigError with the
/// offending key path.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);

/// Graph from the config (file or generator) with the misbehaving partition.
Network build_network(const ExperimentConfig& cfg);

/// Same graph, all nodes regular.
Network build_base_network(const ExperimentConfig& cfg);

}  // namespace fjres
