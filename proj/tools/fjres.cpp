#include <fstream>
#include <functional>
#include <iostream>
#include <map>

#include <omp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "fjres/commands.hpp"
#include "fjres/config.hpp"
#include "fjres/error.hpp"

namespace {

using Command = std::function<int(const fjres::ExperimentConfig&, std::ostream&)>;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  int threads = 0;
};

int run(const Command& command, const Options& opt) {
  fjres::ExperimentConfig cfg = fjres::load_config(opt.config);
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.threads > 0) omp_set_num_threads(opt.threads);
  const std::string path = !opt.out.empty() ? opt.out : cfg.output.value_or("");
  if (path.empty()) return command(cfg, std::cout);
  std::ofstream file(path);
  if (!file) throw fjres::ConfigError("output: cannot open " + path);
  const int code = command(cfg, file);
  file.flush();
  if (!file) throw fjres::ConfigError("output: write failed for " + path);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Friedkin-Johnsen resilient averaging simulator"};
  app.require_subcommand(1);

  const std::map<std::string, std::pair<std::string, Command>> verbs{
      {"generate", {"Write the configured graph as an edge list", fjres::cmd_generate}},
      {"error-curve", {"Analytic error terms over a lambda grid", fjres::cmd_error_curve}},
      {"compare", {"Consensus, FJ, W-MSR and SABA costs over time", fjres::cmd_compare}},
      {"mc-validate", {"Analytic error against Monte Carlo", fjres::cmd_mc_validate}},
      {"sweep", {"Optimal lambda or worst-case error along a sweep axis", fjres::cmd_sweep}},
      {"gramian", {"Controllability Gramian trace over lambda", fjres::cmd_gramian}},
      {"prune", {"Greedy edge removal with a matching baseline", fjres::cmd_prune}},
  };

  Options opt;
  std::uint64_t seed = 0;
  const Command* selected = nullptr;
  std::map<CLI::App*, const Command*> lookup;
  for (const auto& [name, entry] : verbs) {
    CLI::App* sub = app.add_subcommand(name, entry.first);
    sub->add_option("--config", opt.config, "JSON experiment config")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Override the experiment seed");
    sub->add_option("--out", opt.out, "Output path (default: config output, else stdout)");
    sub->add_option("--threads", opt.threads, "OpenMP threads")->check(CLI::PositiveNumber);
    lookup[sub] = &entry.second;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? fjres::kExitOk : fjres::kExitConfig;
  }

  for (const auto& [sub, command] : lookup) {
    if (sub->parsed()) {
      selected = command;
      if (sub->count("--seed") > 0) opt.seed = seed;
    }
  }

  try {
    return run(*selected, opt);
  } catch (const fjres::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return fjres::kExitConfig;
  } catch (const fjres::InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return fjres::kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return fjres::kExitConfig;
  } catch (const fjres::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return fjres::kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return fjres::kExitNumerical;
  }
}
