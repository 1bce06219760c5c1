#include "fjres/config.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>

#include "fjres/error.hpp"

namespace fjres {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
  if (!obj.is_object()) fail(path, "expected an object");
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) fail(path + "." + item.key(), "unknown key");
  }
}

double get_number(const json& obj, const std::string& key, const std::string& path, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) fail(path + "." + key, "expected a number");
  return v.get<double>();
}

long long get_integer(const json& obj, const std::string& key, const std::string& path, long long fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
  return v.get<long long>();
}

std::uint64_t get_seed(const json& v, const std::string& path) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
    fail(path, "expected a nonnegative integer seed");
  }
  return v.get<std::uint64_t>();
}

std::string get_string(const json& obj, const std::string& key, const std::string& path, const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) fail(path + "." + key, "expected a string");
  return v.get<std::string>();
}

std::vector<double> get_numbers(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) fail(path, "expected an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

Eigen::MatrixXd get_matrix(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) fail(path, "expected a non-empty array of rows");
  const std::size_t rows = v.size();
  const std::size_t cols = v[0].is_array() ? v[0].size() : 0;
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    const std::vector<double> row = get_numbers(v[i], path + "[" + std::to_string(i) + "]");
    if (row.size() != cols) fail(path, "rows have different lengths");
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = row[j];
  }
  return m;
}

template <class F>
auto wrap(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const InvalidArgument& e) {
    fail(path, e.what());
  }
}

void parse_graph(const json& g, ExperimentConfig& cfg) {
  const std::string path = "graph";
  check_keys(g, path, {"kind", "n", "degree", "p", "radius", "edges", "seed", "file"});
  if (g.contains("file")) {
    cfg.graph_file = get_string(g, "file", path, "");
    return;
  }
  GraphSpec& s = cfg.graph;
  s.kind = wrap(path + ".kind", [&] { return graph_kind_from_string(get_string(g, "kind", path, "k_regular")); });
  s.n = static_cast<int>(get_integer(g, "n", path, 0));
  s.degree = static_cast<int>(get_integer(g, "degree", path, 0));
  s.p = get_number(g, "p", path, 0.0);
  s.radius = get_number(g, "radius", path, 0.0);
  if (g.contains("edges")) {
    const json& edges = g.at("edges");
    if (!edges.is_array()) fail(path + ".edges", "expected an array of [u, v] pairs");
    for (const auto& e : edges) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer()) {
        fail(path + ".edges", "expected an array of [u, v] pairs");
      }
      s.edges.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
  }
  if (g.contains("seed")) cfg.graph_seed = get_seed(g.at("seed"), path + ".seed");
  wrap(path, [&] { s.validate(); return 0; });
}

void parse_misbehaving(const json& m, ExperimentConfig& cfg) {
  const std::string path = "misbehaving";
  check_keys(m, path, {"ids", "count"});
  if (m.contains("ids")) {
    for (double id : get_numbers(m.at("ids"), path + ".ids")) cfg.misbehaving_ids.push_back(static_cast<int>(id));
  }
  cfg.misbehaving_count = static_cast<int>(get_integer(m, "count", path, 0));
  if (cfg.misbehaving_count < 0) fail(path + ".count", "must be nonnegative");
  if (!cfg.misbehaving_ids.empty() && cfg.misbehaving_count > 0) fail(path, "give either ids or count");
}

PriorKind prior_kind(const std::string& name, const std::string& path) {
  if (name == "diagonal") return PriorKind::Diagonal;
  if (name == "exp_decay") return PriorKind::ExpDecay;
  if (name == "explicit") return PriorKind::Explicit;
  fail(path, "unknown prior kind '" + name + "'");
}

void parse_prior(const json& p, PriorConfig& out) {
  const std::string path = "prior";
  check_keys(p, path, {"kind", "variance", "variances", "base", "rate", "sigma"});
  out.kind = prior_kind(get_string(p, "kind", path, "diagonal"), path + ".kind");
  out.variance = get_number(p, "variance", path, 1.0);
  if (p.contains("variances")) out.variances = get_numbers(p.at("variances"), path + ".variances");
  out.base = get_number(p, "base", path, 10.0);
  out.rate = get_number(p, "rate", path, 0.2);
  if (p.contains("sigma")) out.sigma = get_matrix(p.at("sigma"), path + ".sigma");
  if (out.kind == PriorKind::Explicit && out.sigma.size() == 0) fail(path + ".sigma", "required for explicit priors");
  if (!(out.variance > 0.0)) fail(path + ".variance", "must be positive");
}

void parse_misbehavior(const json& m, MisbehaviorConfig& out) {
  const std::string path = "misbehavior";
  check_keys(m, path, {"d", "q", "V", "Q", "fixed_bias", "bias_range"});
  out.d = get_number(m, "d", path, 0.0);
  out.q = get_number(m, "q", path, 0.0);
  if (out.d < 0.0) fail(path + ".d", "must be nonnegative");
  if (out.q < 0.0) fail(path + ".q", "must be nonnegative");
  if (m.contains("V")) out.v = get_matrix(m.at("V"), path + ".V");
  if (m.contains("Q")) out.q_matrix = get_matrix(m.at("Q"), path + ".Q");
  if (m.contains("fixed_bias")) out.fixed_bias = get_numbers(m.at("fixed_bias"), path + ".fixed_bias");
  if (m.contains("bias_range")) {
    const auto r = get_numbers(m.at("bias_range"), path + ".bias_range");
    if (r.size() != 2 || !(r[0] <= r[1])) fail(path + ".bias_range", "expected [lo, hi] with lo <= hi");
    out.bias_range = std::make_pair(r[0], r[1]);
  }
  if (out.fixed_bias && out.bias_range) fail(path, "give either fixed_bias or bias_range");
}

void parse_protocol(const json& p, ProtocolConfig& out) {
  const std::string path = "protocol";
  check_keys(p, path, {"lambda", "design_v", "design_q", "trim", "protocols"});
  if (p.contains("lambda")) {
    const json& l = p.at("lambda");
    if (l.is_string()) {
      if (l.get<std::string>() != "auto") fail(path + ".lambda", "expected a number or \"auto\"");
      out.auto_lambda = true;
    } else if (l.is_number()) {
      out.lambda = l.get<double>();
      if (!(out.lambda >= 0.0 && out.lambda <= 1.0)) fail(path + ".lambda", "must lie in [0, 1]");
    } else {
      fail(path + ".lambda", "expected a number or \"auto\"");
    }
  }
  out.design_v = get_number(p, "design_v", path, 5.0);
  out.design_q = get_number(p, "design_q", path, 0.0);
  if (out.design_v < 0.0 || out.design_q < 0.0) fail(path, "design intensities must be nonnegative");
  out.trim = static_cast<int>(get_integer(p, "trim", path, 1));
  if (out.trim < 0) fail(path + ".trim", "must be nonnegative");
  if (p.contains("protocols")) {
    const json& list = p.at("protocols");
    if (!list.is_array() || list.empty()) fail(path + ".protocols", "expected a non-empty array of names");
    out.protocols.clear();
    for (const auto& name : list) {
      if (!name.is_string()) fail(path + ".protocols", "expected protocol names");
      out.protocols.push_back(wrap(path + ".protocols", [&] { return protocol_from_string(name.get<std::string>()); }));
    }
  }
}

void parse_sweep(const json& s, SweepConfig& out) {
  const std::string path = "sweep";
  check_keys(s, path, {"axis", "values", "family", "n", "policy", "random_count", "samples"});
  out.axis = get_string(s, "axis", path, "");
  static const std::set<std::string> axes{"lambda", "d", "q", "M", "density"};
  if (!axes.count(out.axis)) fail(path + ".axis", "expected one of lambda, d, q, M, density");
  if (!s.contains("values")) fail(path + ".values", "required");
  out.values = get_numbers(s.at("values"), path + ".values");
  if (out.values.empty()) fail(path + ".values", "must not be empty");
  out.family = wrap(path + ".family", [&] { return graph_kind_from_string(get_string(s, "family", path, "k_regular")); });
  out.n = static_cast<int>(get_integer(s, "n", path, 100));
  out.policy = wrap(path + ".policy", [&] { return attacker_policy_from_string(get_string(s, "policy", path, "worst_case")); });
  out.random_count = static_cast<int>(get_integer(s, "random_count", path, 5));
  out.samples = static_cast<int>(get_integer(s, "samples", path, 100));
  if (out.samples < 1) fail(path + ".samples", "must be positive");
}

void parse_objective(const json& o, DesignObjective& out) {
  const std::string path = "objective";
  check_keys(o, path, {"kind", "lambda", "prior", "d", "q", "k_policy", "fixed_k"});
  out.kind = wrap(path + ".kind", [&] { return objective_kind_from_string(get_string(o, "kind", path, "consensus_error")); });
  out.lambda = get_number(o, "lambda", path, 0.1);
  if (!(out.lambda >= 0.0 && out.lambda <= 1.0)) fail(path + ".lambda", "must lie in [0, 1]");
  out.d = get_number(o, "d", path, 10.0);
  out.q = get_number(o, "q", path, 0.0);
  if (out.d < 0.0 || out.q < 0.0) fail(path, "d and q must be nonnegative");
  out.k_policy = wrap(path + ".k_policy", [&] { return k_policy_from_string(get_string(o, "k_policy", path, "reachability")); });
  out.fixed_k = static_cast<int>(get_integer(o, "fixed_k", path, 0));
  if (out.k_policy == KPolicy::Fixed && out.fixed_k < 1) fail(path + ".fixed_k", "required and >= 1 for a fixed K");
  if (o.contains("prior")) {
    const json& p = o.at("prior");
    check_keys(p, path + ".prior", {"kind", "variance", "base", "rate"});
    out.prior.kind = prior_kind(get_string(p, "kind", path + ".prior", "diagonal"), path + ".prior.kind");
    if (out.prior.kind == PriorKind::Explicit) fail(path + ".prior.kind", "explicit priors are not supported in design studies");
    out.prior.variance = get_number(p, "variance", path + ".prior", 1.0);
    out.prior.base = get_number(p, "base", path + ".prior", 10.0);
    out.prior.rate = get_number(p, "rate", path + ".prior", 0.2);
  }
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
  check_keys(doc, "config",
             {"graph", "misbehaving", "prior", "misbehavior", "protocol", "sweep", "objective", "lambda_resolution",
              "lambdas", "horizon", "transient_tol", "trials", "z_threshold", "max_removals", "seed", "output"});
  ExperimentConfig cfg;
  if (doc.contains("seed")) cfg.seed = get_seed(doc.at("seed"), "seed");
  if (!doc.contains("graph")) fail("graph", "required");
  parse_graph(doc.at("graph"), cfg);
  if (doc.contains("misbehaving")) parse_misbehaving(doc.at("misbehaving"), cfg);
  if (doc.contains("prior")) parse_prior(doc.at("prior"), cfg.prior);
  if (doc.contains("misbehavior")) parse_misbehavior(doc.at("misbehavior"), cfg.misbehavior);
  if (doc.contains("protocol")) parse_protocol(doc.at("protocol"), cfg.protocol);
  if (doc.contains("sweep")) {
    cfg.sweep.emplace();
    parse_sweep(doc.at("sweep"), *cfg.sweep);
  }
  if (doc.contains("objective")) parse_objective(doc.at("objective"), cfg.objective);
  cfg.lambda_resolution = static_cast<int>(get_integer(doc, "lambda_resolution", "config", 256));
  if (cfg.lambda_resolution < 32) fail("lambda_resolution", "must be at least 32");
  if (doc.contains("lambdas")) {
    cfg.lambdas = get_numbers(doc.at("lambdas"), "lambdas");
    for (double l : cfg.lambdas) {
      if (!(l >= 0.0 && l <= 1.0)) fail("lambdas", "values must lie in [0, 1]");
    }
  }
  cfg.horizon = static_cast<int>(get_integer(doc, "horizon", "config", 0));
  if (cfg.horizon < 0) fail("horizon", "must be nonnegative");
  cfg.transient_tol = get_number(doc, "transient_tol", "config", 1e-9);
  if (!(cfg.transient_tol > 0.0 && cfg.transient_tol < 1.0)) fail("transient_tol", "must lie in (0, 1)");
  cfg.trials = static_cast<int>(get_integer(doc, "trials", "config", 200));
  if (cfg.trials < kMinMonteCarloTrials) fail("trials", "must be at least " + std::to_string(kMinMonteCarloTrials));
  cfg.z_threshold = get_number(doc, "z_threshold", "config", 4.0);
  cfg.max_removals = static_cast<int>(get_integer(doc, "max_removals", "config", -1));
  if (doc.contains("output")) cfg.output = get_string(doc, "output", "config", "");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

PriorModel PriorConfig::build(const Network& net) const {
  return wrap("prior", [&] {
    switch (kind) {
      case PriorKind::Diagonal:
        if (!variances.empty()) {
          if (static_cast<int>(variances.size()) != net.size()) throw InvalidArgument("needs one variance per node");
          // variances are listed by external label
          Eigen::VectorXd v(net.size());
          for (int i = 0; i < net.size(); ++i) v(i) = variances[net.label(i) - 1];
          return PriorModel::diagonal(v);
        }
        return PriorModel::identity(net.size(), variance);
      case PriorKind::ExpDecay: return PriorModel::exp_decay(net, base, rate);
      case PriorKind::Explicit: {
        if (sigma.rows() != net.size()) throw InvalidArgument("sigma size does not match the network");
        Eigen::MatrixXd permuted(net.size(), net.size());
        for (int i = 0; i < net.size(); ++i) {
          for (int j = 0; j < net.size(); ++j) permuted(i, j) = sigma(net.label(i) - 1, net.label(j) - 1);
        }
        return PriorModel::explicit_covariance(permuted);
      }
    }
    throw InvalidArgument("unknown prior kind");
  });
}

MisbehaviorModel MisbehaviorConfig::build(int m, std::uint64_t seed) const {
  return wrap("misbehavior", [&] {
    Eigen::MatrixXd vm = v ? *v : d * Eigen::MatrixXd::Identity(m, m);
    Eigen::MatrixXd qm = q_matrix ? *q_matrix : q * Eigen::MatrixXd::Identity(m, m);
    if (vm.rows() != m || qm.rows() != m) throw InvalidArgument("V and Q must be M×M");
    std::optional<Eigen::VectorXd> bias;
    if (fixed_bias) {
      if (static_cast<int>(fixed_bias->size()) != m) throw InvalidArgument("fixed_bias needs one entry per misbehaving node");
      bias = Eigen::Map<const Eigen::VectorXd>(fixed_bias->data(), m);
    } else if (bias_range) {
      Rng rng = make_rng(seed, 3);
      std::uniform_real_distribution<double> unif(bias_range->first, bias_range->second);
      Eigen::VectorXd b(m);
      for (int k = 0; k < m; ++k) b(k) = unif(rng);
      bias = b;
    }
    return MisbehaviorModel(vm, qm, bias);
  });
}

Network build_base_network(const ExperimentConfig& cfg) {
  return wrap("graph", [&] {
    if (cfg.graph_file) {
      std::ifstream in(*cfg.graph_file);
      if (!in) throw InvalidArgument("cannot open graph file '" + *cfg.graph_file + "'");
      const Network net = read_edge_list(in);
      // rebuild in label order without the stored partition
      std::vector<Edge> edges;
      for (Edge e : net.edges()) edges.push_back(make_edge(net.label(e.u) - 1, net.label(e.v) - 1));
      return Network::from_edges(net.size(), edges);
    }
    GraphSpec spec = cfg.graph;
    spec.seed = cfg.graph_seed.value_or(derive_seed(cfg.seed, 0));
    return generate(spec);
  });
}

Network build_network(const ExperimentConfig& cfg) {
  Network base;
  std::vector<int> stored;
  if (cfg.graph_file) {
    std::ifstream in(*cfg.graph_file);
    if (!in) throw ConfigError("graph: cannot open graph file '" + *cfg.graph_file + "'");
    Network net = wrap("graph", [&] { return read_edge_list(in); });
    stored = net.misbehaving_labels();
    base = build_base_network(cfg);
  } else {
    base = build_base_network(cfg);
  }
  std::vector<int> ids = cfg.misbehaving_ids;
  if (ids.empty() && cfg.misbehaving_count > 0) {
    if (cfg.misbehaving_count >= base.size()) throw ConfigError("misbehaving.count: leaves no regular node");
    Rng rng = make_rng(cfg.seed, 2);
    std::vector<int> labels(base.size());
    std::iota(labels.begin(), labels.end(), 1);
    for (int k = 0; k < cfg.misbehaving_count; ++k) {
      std::uniform_int_distribution<int> pick(k, base.size() - 1);
      std::swap(labels[k], labels[pick(rng)]);
      ids.push_back(labels[k]);
    }
    std::sort(ids.begin(), ids.end());
  }
  if (ids.empty()) ids = stored;
  if (ids.empty()) return base;
  return wrap("misbehaving", [&] { return mark_misbehaving(base, ids); });
}

}  // namespace fjres
