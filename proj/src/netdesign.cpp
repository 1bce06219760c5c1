#include "fjres/netdesign.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "fjres/analysis.hpp"
#include "fjres/error.hpp"
#include "fjres/format.hpp"
#include "fjres/numerics.hpp"
#include "parallel.hpp"

namespace fjres {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kTieTolerance = 1e-9;

bool strictly_greater(double a, double b) { return a > b + kTieTolerance * std::max(std::abs(b), 1e-300); }
bool strictly_less(double a, double b) { return a < b - kTieTolerance * std::max(std::abs(b), 1e-300); }

}  // namespace

std::string to_string(ObjectiveKind k) {
  return k == ObjectiveKind::GramianTrace ? "gramian_trace" : "consensus_error";
}

ObjectiveKind objective_kind_from_string(const std::string& name) {
  if (name == "consensus_error") return ObjectiveKind::ConsensusError;
  if (name == "gramian_trace") return ObjectiveKind::GramianTrace;
  throw InvalidArgument("unknown objective kind '" + name + "'");
}

std::string to_string(AttackerPolicy p) { return p == AttackerPolicy::Random ? "random" : "worst_case"; }

AttackerPolicy attacker_policy_from_string(const std::string& name) {
  if (name == "worst_case") return AttackerPolicy::WorstCase;
  if (name == "random") return AttackerPolicy::Random;
  throw InvalidArgument("unknown attacker policy '" + name + "'");
}

PriorModel PriorSpec::build(const Network& net) const {
  switch (kind) {
    case PriorKind::Diagonal: return PriorModel::identity(net.size(), variance);
    case PriorKind::ExpDecay: return PriorModel::exp_decay(net, base, rate);
    case PriorKind::Explicit: break;
  }
  throw InvalidArgument("design studies need a diagonal or exp_decay prior");
}

double DesignObjective::evaluate(const Network& marked) const {
  if (kind == ObjectiveKind::GramianTrace) {
    return gramian_trace(marked, lambda, resolve_k(marked, k_policy, fixed_k));
  }
  const int m = marked.misbehaving_count();
  return ErrorModel(marked, prior.build(marked), MisbehaviorModel::scalar(m, d, q)).total(lambda);
}

// ---------------------------------------------------------------- attackers

namespace {

void require_all_regular(const Network& net) {
  if (net.misbehaving_count() != 0) throw InvalidArgument("design studies start from an all-regular network");
  if (net.size() < 2) throw InvalidArgument("design studies need at least two nodes");
}

bool fast_path_applies(const DesignObjective& obj) {
  return obj.kind == ObjectiveKind::ConsensusError && obj.q == 0.0 && obj.lambda >= kLambdaGuard;
}

// Consensus error of every placement from one inverse K⁻¹, K = I − (1−λ)W°.
// Removing row and column m gives (K₋ₘ)⁻¹ = K⁻¹₋ₘ,₋ₘ − K⁻¹₋ₘ,ₘ K⁻¹ₘ,₋ₘ / K⁻¹ₘₘ.
class PlacementEvaluator {
public:
  PlacementEvaluator(const Network& net, const DesignObjective& obj)
      : n_(net.size()), lambda_(obj.lambda), d_(obj.d), w_(net.weights()), sigma_(obj.prior.build(net).sigma()) {
    MatrixXd k = -(1.0 - lambda_) * w_;
    k.diagonal().array() += 1.0;
    kinv_ = numerics::inverse(k);
    sigma_diagonal_ = numerics::is_diagonal(sigma_);
  }

  double value(int m) const {
    const int r = n_ - 1;
    std::vector<int> idx;
    idx.reserve(r);
    for (int i = 0; i < n_; ++i) {
      if (i != m) idx.push_back(i);
    }
    const VectorXd col = kinv_(idx, m);
    const Eigen::RowVectorXd row = kinv_(m, idx);
    const MatrixXd sub = kinv_(idx, idx) - col * row / kinv_(m, m);
    const VectorXd wm = (1.0 - lambda_) * w_(idx, m);

    // E in original column order: regular columns L1 − 1/R, column m is L2.
    MatrixXd e(r, n_);
    for (int c = 0; c < r; ++c) e.col(idx[c]) = lambda_ * sub.col(c);
    e.array() -= 1.0 / r;
    e.col(m) = sub * wm;

    Eigen::VectorXd diag = sigma_.diagonal();
    if (sigma_diagonal_) {
      diag(m) += d_;
      double acc = 0.0;
      for (int j = 0; j < n_; ++j) acc += diag(j) * e.col(j).squaredNorm();
      return acc;
    }
    MatrixXd sigma = sigma_;
    sigma(m, m) += d_;
    return (e * sigma).cwiseProduct(e).sum();
  }

private:
  int n_;
  double lambda_;
  double d_;
  const MatrixXd& w_;
  MatrixXd sigma_;
  bool sigma_diagonal_ = false;
  MatrixXd kinv_;
};

double placement_value(const Network& net, const DesignObjective& obj, int m) {
  return obj.evaluate(mark_misbehaving(net, {net.label(m)}));
}

AttackerChoice argmax(const Network& net, const std::vector<double>& values) {
  std::size_t best = 0;
  for (std::size_t m = 1; m < values.size(); ++m) {
    if (strictly_greater(values[m], values[best])) best = m;
  }
  return {net.label(static_cast<int>(best)), values[best]};
}

}  // namespace

std::vector<double> attacker_values(const Network& net, const DesignObjective& objective) {
  require_all_regular(net);
  std::vector<double> values(net.size());
  if (fast_path_applies(objective)) {
    const PlacementEvaluator eval(net, objective);
    detail::parallel_for(net.size(), [&](int m) { values[m] = eval.value(m); });
  } else {
    detail::parallel_for(net.size(), [&](int m) { values[m] = placement_value(net, objective, m); });
  }
  return values;
}

std::vector<double> attacker_values_serial(const Network& net, const DesignObjective& objective) {
  require_all_regular(net);
  std::vector<double> values(net.size());
  for (int m = 0; m < net.size(); ++m) values[m] = placement_value(net, objective, m);
  return values;
}

AttackerChoice worst_case_attacker(const Network& net, const DesignObjective& objective) {
  return argmax(net, attacker_values(net, objective));
}

AttackerChoice worst_case_attacker_serial(const Network& net, const DesignObjective& objective) {
  return argmax(net, attacker_values_serial(net, objective));
}

// ---------------------------------------------------------------- sweeps

namespace {

GraphSpec family_spec(const SweepSpec& spec, double density, std::uint64_t seed) {
  switch (spec.family) {
    case GraphKind::KRegular: return GraphSpec::k_regular(spec.n, static_cast<int>(std::lround(density)), seed);
    case GraphKind::ErdosRenyi: return GraphSpec::erdos_renyi(spec.n, density, seed);
    case GraphKind::Geometric: return GraphSpec::geometric(spec.n, density, seed);
    case GraphKind::Explicit: break;
  }
  throw InvalidArgument("connectivity sweeps need a random graph family");
}

void check_sweep(const SweepSpec& spec) {
  if (spec.densities.empty()) throw InvalidArgument("sweep needs at least one density value");
  if (spec.samples < 1) throw InvalidArgument("sweep needs at least one sample per density");
  if (spec.policy == AttackerPolicy::Random && (spec.random_count < 1 || spec.random_count >= spec.n)) {
    throw InvalidArgument("random attacker count must lie in [1, n)");
  }
  for (double density : spec.densities) family_spec(spec, density, 0).validate();
}

double sample_value(const SweepSpec& spec, int a, int s, bool parallel_inner) {
  const std::uint64_t seed = derive_seed(spec.seed, static_cast<std::uint64_t>(a), static_cast<std::uint64_t>(s));
  const Network net = generate(family_spec(spec, spec.densities[a], seed));
  if (spec.policy == AttackerPolicy::WorstCase) {
    return parallel_inner ? worst_case_attacker(net, spec.objective).value
                          : worst_case_attacker_serial(net, spec.objective).value;
  }
  Rng rng = make_rng(seed, 1);
  std::vector<int> labels(net.size());
  std::iota(labels.begin(), labels.end(), 1);
  std::vector<int> chosen;
  for (int k = 0; k < spec.random_count; ++k) {
    std::uniform_int_distribution<int> pick(k, net.size() - 1);
    std::swap(labels[k], labels[pick(rng)]);
    chosen.push_back(labels[k]);
  }
  std::sort(chosen.begin(), chosen.end());
  return spec.objective.evaluate(mark_misbehaving(net, chosen));
}

std::vector<SweepRow> summarize(const SweepSpec& spec, const std::vector<double>& values) {
  std::vector<SweepRow> rows;
  const int s_count = spec.samples;
  for (std::size_t a = 0; a < spec.densities.size(); ++a) {
    double mean = 0.0;
    for (int s = 0; s < s_count; ++s) mean += values[a * s_count + s];
    mean /= s_count;
    double ss = 0.0;
    for (int s = 0; s < s_count; ++s) ss += std::pow(values[a * s_count + s] - mean, 2);
    const double se = s_count > 1 ? std::sqrt(ss / (s_count - 1) / s_count) : 0.0;
    rows.push_back({spec.densities[a], spec.objective.kind, mean, se, s_count});
  }
  return rows;
}

}  // namespace

std::vector<SweepRow> connectivity_sweep(const SweepSpec& spec) {
  check_sweep(spec);
  const int total = static_cast<int>(spec.densities.size()) * spec.samples;
  std::vector<double> values(total);
  detail::parallel_for(total, [&](int t) { values[t] = sample_value(spec, t / spec.samples, t % spec.samples, true); });
  return summarize(spec, values);
}

std::vector<SweepRow> connectivity_sweep_serial(const SweepSpec& spec) {
  check_sweep(spec);
  const int total = static_cast<int>(spec.densities.size()) * spec.samples;
  std::vector<double> values(total);
  for (int t = 0; t < total; ++t) values[t] = sample_value(spec, t / spec.samples, t % spec.samples, false);
  return summarize(spec, values);
}

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
  out << "density_or_step,objective_kind,mean,stderr\n";
  for (const auto& row : rows) {
    out << fmt(row.density) << ',' << to_string(row.kind) << ',' << fmt(row.mean) << ',' << fmt(row.std_error)
        << '\n';
  }
}

// ---------------------------------------------------------------- pruning

std::vector<Edge> feasible_removals(const Network& net, int delta) {
  std::vector<Edge> out;
  for (Edge e : net.edges()) {
    if (net.degree(e.u) != delta || net.degree(e.v) != delta) continue;
    if (!remove_edges_unchecked(net, {e}).connected()) continue;
    out.push_back(e);
  }
  return out;
}

PruneTrace greedy_prune(const Network& net, const DesignObjective& objective, int max_removals) {
  require_all_regular(net);
  const int delta = net.degree(0);
  for (int i = 0; i < net.size(); ++i) {
    if (net.degree(i) != delta) throw InvalidArgument("greedy_prune needs a regular graph");
  }
  if (!net.connected()) throw InvalidArgument("greedy_prune needs a connected graph");
  if (max_removals < 0) throw InvalidArgument("max_removals must be nonnegative");

  PruneTrace trace;
  trace.delta = delta;
  trace.initial_value = worst_case_attacker(net, objective).value;
  Network current = net;
  for (int step = 1; step <= max_removals; ++step) {
    const std::vector<Edge> candidates = feasible_removals(current, delta);
    if (candidates.empty()) break;
    std::vector<AttackerChoice> choices(candidates.size());
    detail::parallel_for(static_cast<int>(candidates.size()), [&](int c) {
      choices[c] = worst_case_attacker(remove_edges_unchecked(current, {candidates[c]}), objective);
    });
    std::size_t best = 0;
    for (std::size_t c = 1; c < candidates.size(); ++c) {
      if (strictly_less(choices[c].value, choices[best].value)) best = c;
    }
    current = remove_edge(current, candidates[best]);
    PruneStep rec;
    rec.step = step;
    rec.edge_u = current.label(candidates[best].u);
    rec.edge_v = current.label(candidates[best].v);
    rec.value = choices[best].value;
    rec.attacker = choices[best].node;
    rec.degree_histogram = current.degree_histogram();
    trace.steps.push_back(rec);
  }
  trace.final_network = current;
  return trace;
}

MatchingBaseline matching_baseline(const Network& net, const DesignObjective& objective) {
  require_all_regular(net);
  const Network reduced = perfect_matching_removal(net);
  const AttackerChoice choice = worst_case_attacker(reduced, objective);
  return {choice.value, choice.node, static_cast<int>(net.edge_count() - reduced.edge_count())};
}

void write_prune_csv(const PruneTrace& trace, const MatchingBaseline* baseline, std::ostream& out) {
  out << "step,edge_u,edge_v,value\n";
  out << "0,,," << fmt(trace.initial_value) << '\n';
  for (const auto& s : trace.steps) {
    out << s.step << ',' << s.edge_u << ',' << s.edge_v << ',' << fmt(s.value) << '\n';
  }
  if (baseline) out << "matching,,," << fmt(baseline->value) << '\n';
}

}  // namespace fjres
