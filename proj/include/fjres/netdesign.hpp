#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "fjres/dynamics.hpp"
#include "fjres/gramian.hpp"
#include "fjres/graphs.hpp"

namespace fjres {

enum class ObjectiveKind { ConsensusError, GramianTrace };

std::string to_string(ObjectiveKind k);
ObjectiveKind objective_kind_from_string(const std::string& name);

/// Prior recipe applied to each evaluated network (identity-scaled or
/// exponential decay over hop distance).
struct PriorSpec {
  PriorKind kind = PriorKind::Diagonal;
  double variance = 1.0;  // diagonal
  double base = 10.0;     // exp_decay
  double rate = 0.2;      // exp_decay

  PriorModel build(const Network& net) const;
};

struct DesignObjective {
  ObjectiveKind kind = ObjectiveKind::ConsensusError;
  double lambda = 0.1;
  PriorSpec prior;
  double d = 10.0;  // V = d·I
  double q = 0.0;   // Q = q·I
  KPolicy k_policy = KPolicy::Reachability;
  int fixed_k = 0;

  /// Objective on a network that already carries its misbehaving partition.
  double evaluate(const Network& marked) const;
};

struct AttackerChoice {
  int node = 0;  // external 1-based label
  double value = 0.0;
};

/// Objective for every single-node placement, in label order. The consensus
/// error with zero noise uses principal-submatrix inverse updates of
/// (I − (1−λ)W°)⁻¹; other objectives mark and evaluate each placement.
std::vector<double> attacker_values(const Network& net, const DesignObjective& objective);

/// Reference: mark each placement and evaluate it independently, serially.
std::vector<double> attacker_values_serial(const Network& net, const DesignObjective& objective);

/// Argmax over single-node placements; near-ties (1e-9 relative) go to the
/// lowest label.
AttackerChoice worst_case_attacker(const Network& net, const DesignObjective& objective);
AttackerChoice worst_case_attacker_serial(const Network& net, const DesignObjective& objective);

enum class AttackerPolicy { WorstCase, Random };

std::string to_string(AttackerPolicy p);
AttackerPolicy attacker_policy_from_string(const std::string& name);

struct SweepSpec {
  GraphKind family = GraphKind::KRegular;
  int n = 100;
  /// Δ for k_regular, p for erdos_renyi, ρ for geometric.
  std::vector<double> densities;
  AttackerPolicy policy = AttackerPolicy::WorstCase;
  int random_count = 5;
  int samples = 100;
  std::uint64_t seed = 1;
  DesignObjective objective;
};

struct SweepRow {
  double density = 0.0;
  ObjectiveKind kind = ObjectiveKind::ConsensusError;
  double mean = 0.0;
  double std_error = 0.0;
  int samples = 0;
};

/// Graph (a, s) uses seed derive_seed(spec.seed, a, s); samples run in
/// parallel and reduce in sample order.
std::vector<SweepRow> connectivity_sweep(const SweepSpec& spec);
std::vector<SweepRow> connectivity_sweep_serial(const SweepSpec& spec);

/// CSV with header `density_or_step,objective_kind,mean,stderr`.
void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out);

struct PruneStep {
  int step = 0;
  int edge_u = 0;  // external labels
  int edge_v = 0;
  double value = 0.0;
  int attacker = 0;
  std::map<int, int> degree_histogram;
};

struct PruneTrace {
  int delta = 0;
  double initial_value = 0.0;
  std::vector<PruneStep> steps;
  Network final_network;
};

/// Edges whose removal keeps every degree in {Δ, Δ−1} and the graph connected.
std::vector<Edge> feasible_removals(const Network& net, int delta);

/// Repeatedly removes the feasible edge minimizing the worst-case objective,
/// ties to the lexicographically smallest edge.
PruneTrace greedy_prune(const Network& net, const DesignObjective& objective, int max_removals);

struct MatchingBaseline {
  double value = 0.0;
  int attacker = 0;
  int removed = 0;
};

MatchingBaseline matching_baseline(const Network& net, const DesignObjective& objective);

/// CSV with header `step,edge_u,edge_v,value`. Step 0 is the initial graph;
/// a final `matching` row is added when a baseline is given.
void write_prune_csv(const PruneTrace& trace, const MatchingBaseline* baseline, std::ostream& out);

}  // namespace fjres
