#include "fjres/commands.hpp"

#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>

#include "fjres/analysis.hpp"
#include "fjres/error.hpp"
#include "fjres/format.hpp"
#include "fjres/gramian.hpp"
#include "fjres/netdesign.hpp"

namespace fjres {

using Eigen::MatrixXd;

namespace {

constexpr int kDefaultCompareHorizon = 100;
const std::vector<double> kDefaultValidationLambdas{0.1, 0.3, 0.5, 0.8, 1.0};

// RNG stream indices under the experiment seed. 0: graph, 2: random
// placement, 3: bias draws.
constexpr std::uint64_t kStreamCompare = 4;
constexpr std::uint64_t kStreamValidate = 5;
constexpr std::uint64_t kStreamSweepPlacement = 6;

MisbehaviorConfig with_axis(MisbehaviorConfig mis, const std::string& axis, double value) {
  if (axis == "d") {
    mis.d = value;
    mis.v.reset();
  } else if (axis == "q") {
    mis.q = value;
    mis.q_matrix.reset();
  }
  return mis;
}

}  // namespace

CompareResult run_compare(const ExperimentConfig& cfg) {
  const Network net = build_network(cfg);
  const PriorModel prior = cfg.prior.build(net);
  const int m = net.misbehaving_count();
  const MisbehaviorModel mis = cfg.misbehavior.build(m, cfg.seed);

  CompareResult result;
  result.lambda = cfg.protocol.lambda;
  if (cfg.protocol.auto_lambda) {
    const MisbehaviorModel design(cfg.protocol.design_v * MatrixXd::Identity(m, m),
                                  cfg.protocol.design_q * MatrixXd::Identity(m, m));
    result.lambda = optimal_lambda(ErrorModel(net, prior, design), cfg.lambda_resolution).lambda;
  }
  ProtocolParams params;
  params.lambda = result.lambda;
  params.trim = cfg.protocol.trim;
  const int horizon = cfg.horizon > 0 ? cfg.horizon : kDefaultCompareHorizon;
  const std::uint64_t seed = derive_seed(cfg.seed, kStreamCompare);
  for (Protocol p : cfg.protocol.protocols) {
    result.protocols.push_back(p);
    result.curves.push_back(mc_cost_curve(net, p, params, prior, mis, horizon, cfg.trials, seed));
  }
  return result;
}

void write_compare_csv(const CompareResult& result, std::ostream& out) {
  out << "k,protocol,cost\n";
  for (std::size_t p = 0; p < result.protocols.size(); ++p) {
    const auto& curve = result.curves[p];
    for (std::size_t k = 0; k < curve.size(); ++k) {
      out << k << ',' << to_string(result.protocols[p]) << ',' << fmt(curve[k]) << '\n';
    }
  }
}

ValidationReport run_mc_validate(const ExperimentConfig& cfg) {
  const Network net = build_network(cfg);
  const PriorModel prior = cfg.prior.build(net);
  const MisbehaviorModel mis = cfg.misbehavior.build(net.misbehaving_count(), cfg.seed);
  const MisbehaviorModel analytic_mis =
      mis.fixed_bias() ? MisbehaviorModel(*mis.fixed_bias() * mis.fixed_bias()->transpose(), mis.noise_cov()) : mis;
  const ErrorModel model(net, prior, analytic_mis);
  const std::vector<double>& lambdas = cfg.lambdas.empty() ? kDefaultValidationLambdas : cfg.lambdas;

  ValidationReport report;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    ValidationRow row;
    row.lambda = lambdas[i];
    row.analytic = model.total(row.lambda);
    const int horizon = cfg.horizon > 0 ? cfg.horizon : horizon_for_tolerance(net, row.lambda, cfg.transient_tol);
    ProtocolParams params;
    params.lambda = row.lambda;
    row.mc = mc_cost(net, Protocol::FJ, params, prior, mis, horizon, cfg.trials,
                     derive_seed(cfg.seed, kStreamValidate, i));
    const double diff = std::abs(row.mc.mean_cost - row.analytic);
    if (row.mc.std_error > 0.0) {
      row.z = diff / row.mc.std_error;
    } else {
      row.z = diff <= 1e-9 * std::max(1.0, std::abs(row.analytic)) ? 0.0 : std::numeric_limits<double>::infinity();
    }
    row.pass = row.z <= cfg.z_threshold;
    report.pass = report.pass && row.pass;
    report.rows.push_back(row);
  }
  return report;
}

void write_validation_csv(const ValidationReport& report, std::ostream& out) {
  out << "lambda,analytic,mc_mean,mc_stderr,z,status\n";
  for (const auto& r : report.rows) {
    out << fmt(r.lambda) << ',' << fmt(r.analytic) << ',' << fmt(r.mc.mean_cost) << ',' << fmt(r.mc.std_error)
        << ',' << fmt(r.z) << ',' << (r.pass ? "PASS" : "FAIL") << '\n';
  }
}

int cmd_generate(const ExperimentConfig& cfg, std::ostream& out) {
  write_edge_list(build_network(cfg), out);
  return kExitOk;
}

int cmd_error_curve(const ExperimentConfig& cfg, std::ostream& out) {
  const Network net = build_network(cfg);
  const PriorModel prior = cfg.prior.build(net);
  const std::vector<double> grid = cfg.lambdas.empty() ? lambda_grid(cfg.lambda_resolution) : cfg.lambdas;

  std::string axis;
  std::vector<double> values{0.0};
  if (cfg.sweep) {
    if (cfg.sweep->axis != "d" && cfg.sweep->axis != "q") {
      throw ConfigError("sweep.axis: error-curve sweeps over d or q");
    }
    axis = cfg.sweep->axis;
    values = cfg.sweep->values;
    out << axis << ',';
  }
  out << "lambda,e_v,e_n,e_total,e_deception,e_consensus,lambda_star\n";
  for (double value : values) {
    const MisbehaviorConfig mc = axis.empty() ? cfg.misbehavior : with_axis(cfg.misbehavior, axis, value);
    const ErrorModel model(net, prior, mc.build(net.misbehaving_count(), cfg.seed));
    const double star = optimal_lambda(model, cfg.lambda_resolution).lambda;
    for (const ErrorPoint& p : error_curve(model, grid)) {
      if (!axis.empty()) out << fmt(value) << ',';
      out << fmt(p.lambda) << ',' << fmt(p.e_v) << ',' << fmt(p.e_n) << ',' << fmt(p.e_total) << ','
          << fmt(p.e_deception) << ',' << fmt(p.e_consensus) << ',' << fmt(star) << '\n';
    }
  }
  return kExitOk;
}

int cmd_compare(const ExperimentConfig& cfg, std::ostream& out) {
  const CompareResult result = run_compare(cfg);
  std::cerr << "compare: lambda = " << fmt(result.lambda) << '\n';
  write_compare_csv(result, out);
  return kExitOk;
}

int cmd_mc_validate(const ExperimentConfig& cfg, std::ostream& out) {
  const ValidationReport report = run_mc_validate(cfg);
  write_validation_csv(report, out);
  return report.pass ? kExitOk : kExitValidation;
}

int cmd_sweep(const ExperimentConfig& cfg, std::ostream& out) {
  if (!cfg.sweep) throw ConfigError("sweep: required for the sweep command");
  const SweepConfig& sw = *cfg.sweep;
  if (sw.axis == "density") {
    SweepSpec spec;
    spec.family = sw.family;
    spec.n = sw.n;
    spec.densities = sw.values;
    spec.policy = sw.policy;
    spec.random_count = sw.random_count;
    spec.samples = sw.samples;
    spec.seed = cfg.seed;
    spec.objective = cfg.objective;
    try {
      write_sweep_csv(connectivity_sweep(spec), out);
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("sweep: ") + e.what());
    }
    return kExitOk;
  }

  const Network net = build_network(cfg);
  const PriorModel prior = cfg.prior.build(net);
  if (sw.axis == "lambda") {
    const ErrorModel model(net, prior, cfg.misbehavior.build(net.misbehaving_count(), cfg.seed));
    for (double l : sw.values) {
      if (!(l >= 0.0 && l <= 1.0)) throw ConfigError("sweep.values: lambda values must lie in [0, 1]");
    }
    write_error_csv(error_curve(model, sw.values), out);
    return kExitOk;
  }

  out << sw.axis << ",lambda_star,e_star\n";
  for (std::size_t i = 0; i < sw.values.size(); ++i) {
    const double value = sw.values[i];
    OptimalLambda best;
    if (sw.axis == "M") {
      if (cfg.misbehavior.v || cfg.misbehavior.q_matrix || cfg.misbehavior.fixed_bias) {
        throw ConfigError("sweep: an M sweep needs scalar d and q");
      }
      const int m = static_cast<int>(value);
      const Network base = build_base_network(cfg);
      if (m < 1 || m >= base.size()) throw ConfigError("sweep.values: M must lie in [1, N)");
      Rng rng = make_rng(derive_seed(cfg.seed, kStreamSweepPlacement), i);
      std::vector<int> labels(base.size());
      std::iota(labels.begin(), labels.end(), 1);
      std::vector<int> chosen;
      for (int k = 0; k < m; ++k) {
        std::uniform_int_distribution<int> pick(k, base.size() - 1);
        std::swap(labels[k], labels[pick(rng)]);
        chosen.push_back(labels[k]);
      }
      const Network marked = mark_misbehaving(base, chosen);
      best = optimal_lambda(marked, cfg.prior.build(marked), cfg.misbehavior.build(m, cfg.seed),
                            cfg.lambda_resolution);
    } else {
      const MisbehaviorConfig mc = with_axis(cfg.misbehavior, sw.axis, value);
      best = optimal_lambda(net, prior, mc.build(net.misbehaving_count(), cfg.seed), cfg.lambda_resolution);
    }
    out << fmt(value) << ',' << fmt(best.lambda) << ',' << fmt(best.error) << '\n';
  }
  return kExitOk;
}

int cmd_gramian(const ExperimentConfig& cfg, std::ostream& out) {
  const Network net = build_network(cfg);
  if (net.misbehaving_count() == 0) throw ConfigError("misbehaving: the Gramian needs misbehaving nodes");
  const int K = resolve_k(net, cfg.objective.k_policy, cfg.objective.fixed_k);
  std::vector<double> grid = cfg.lambdas;
  if (grid.empty()) {
    for (int k = 0; k < cfg.lambda_resolution; ++k) grid.push_back(static_cast<double>(k) / cfg.lambda_resolution);
  }
  write_gramian_csv(gramian_trace_curve(net, grid, K), out);
  return kExitOk;
}

int cmd_prune(const ExperimentConfig& cfg, std::ostream& out) {
  const Network net = build_base_network(cfg);
  const int max_removals = cfg.max_removals < 0 ? net.size() : cfg.max_removals;
  const PruneTrace trace = greedy_prune(net, cfg.objective, max_removals);
  std::optional<MatchingBaseline> baseline;
  try {
    baseline = matching_baseline(net, cfg.objective);
  } catch (const InvalidArgument& e) {
    std::cerr << "prune: no matching baseline (" << e.what() << ")\n";
  }
  write_prune_csv(trace, baseline ? &*baseline : nullptr, out);
  if (baseline) {
    const double final_value = trace.steps.empty() ? trace.initial_value : trace.steps.back().value;
    std::cerr << "prune: greedy " << fmt(final_value) << ", matching " << fmt(baseline->value) << ", ratio "
              << fmt(final_value / baseline->value) << '\n';
  }
  return kExitOk;
}

}  // namespace fjres
