#include <doctest.h>

#include <cmath>
#include <iostream>
#include <sstream>

#include "fjres/commands.hpp"
#include "fjres/config.hpp"
#include "fjres/error.hpp"

using namespace fjres;
using nlohmann::json;

namespace {

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    rows.push_back(cells);
  }
  return rows;
}

std::string run(int (*cmd)(const ExperimentConfig&, std::ostream&), const json& doc, int expected = kExitOk) {
  std::stringstream out;
  CHECK(cmd(parse_config(doc), out) == expected);
  return out.str();
}

json two_node_doc() {
  return json::parse(R"({
    "graph": {"kind": "explicit", "n": 2, "edges": [[1, 2]]},
    "misbehaving": {"ids": [2]},
    "misbehavior": {"d": 2, "q": 1},
    "trials": 10000,
    "horizon": 5,
    "seed": 3
  })");
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("config validation") {
  CHECK_THROWS_AS(parse_config(json::parse(R"({"graph": {"kind": "k_regular", "n": 10, "degree": 3}, "bogus": 1})")),
                  ConfigError);
  try {
    parse_config(json::parse(R"({"graph": {"kind": "k_regular", "n": 10, "degree": 3, "p": "x"}})"));
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("graph.p") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config(json::parse(R"({"prior": {}})")), ConfigError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"graph": {"kind": "ring"}})")), ConfigError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"graph": {"kind": "k_regular", "n": 10, "degree": 3},
                                               "trials": 50})")),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"graph": {"kind": "k_regular", "n": 10, "degree": 3},
                                               "protocol": {"lambda": "fast"}})")),
                  ConfigError);
  const ExperimentConfig cfg = parse_config(json::parse(R"({"graph": {"kind": "k_regular", "n": 10, "degree": 3},
      "protocol": {"lambda": "auto", "protocols": ["fj", "wmsr"]}})"));
  CHECK(cfg.protocol.auto_lambda);
  CHECK(cfg.protocol.design_v == 5.0);
  CHECK(cfg.protocol.protocols.size() == 2);
  CHECK(cfg.trials == 200);
  CHECK(cfg.lambda_resolution == 256);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("generate is deterministic") {
  const json doc = json::parse(R"({"graph": {"kind": "geometric", "n": 30, "radius": 0.35},
                                   "misbehaving": {"count": 3}, "seed": 9})");
  const std::string a = run(cmd_generate, doc);
  CHECK(a == run(cmd_generate, doc));
  json other = doc;
  other["seed"] = 10;
  CHECK(a != run(cmd_generate, other));
  std::stringstream ss(a);
  const Network net = read_edge_list(ss);
  CHECK(net.misbehaving_count() == 3);
}

TEST_CASE("error-curve") {
  SUBCASE("d sweep gives nondecreasing lambda star") {
    const json doc = json::parse(R"({
      "graph": {"kind": "k_regular", "n": 30, "degree": 3},
      "misbehaving": {"ids": [1]},
      "prior": {"kind": "exp_decay", "base": 10, "rate": 0.2},
      "sweep": {"axis": "d", "values": [0, 10, 50]},
      "lambda_resolution": 64, "seed": 1})");
    const auto rows = parse_csv(run(cmd_error_curve, doc));
    CHECK(rows[0] == std::vector<std::string>{"d", "lambda", "e_v", "e_n", "e_total", "e_deception", "e_consensus",
                                              "lambda_star"});
    CHECK(rows.size() == 1 + 3 * 64);
    const double s0 = std::stod(rows[1][7]), s1 = std::stod(rows[65][7]), s2 = std::stod(rows[129][7]);
    CHECK(s0 <= s1);
    CHECK(s1 <= s2);
  }
  SUBCASE("diagonal prior gives one derivative sign change") {
    const json doc = json::parse(R"({
      "graph": {"kind": "k_regular", "n": 30, "degree": 3},
      "misbehaving": {"ids": [4]},
      "misbehavior": {"d": 10, "q": 1},
      "lambda_resolution": 128, "seed": 2})");
    const auto rows = parse_csv(run(cmd_error_curve, doc));
    int changes = 0;
    double prev_slope = 0.0;
    for (std::size_t k = 2; k < rows.size(); ++k) {
      const double slope = std::stod(rows[k][3]) - std::stod(rows[k - 1][3]);
      if (k > 2 && (slope > 0) != (prev_slope > 0)) ++changes;
      prev_slope = slope;
    }
    CHECK(changes == 1);
    CHECK(rows[1][4] != "nan");
  }
  SUBCASE("no misbehaving nodes") {
    const json doc = json::parse(R"({"graph": {"kind": "k_regular", "n": 20, "degree": 4}, "seed": 3})");
    const auto rows = parse_csv(run(cmd_error_curve, doc));
    for (std::size_t k = 1; k < rows.size(); ++k) CHECK(std::stod(rows[k][2]) == 0.0);
    CHECK(std::stod(rows[1][6]) == doctest::Approx(1e-4).epsilon(1e-6));
  }
}

TEST_CASE("compare") {
  SUBCASE("nominal world") {
    const json doc = json::parse(R"({
      "graph": {"kind": "k_regular", "n": 20, "degree": 4},
      "protocol": {"lambda": 0.3, "protocols": ["consensus", "fj"]},
      "horizon": 300, "trials": 100, "seed": 4})");
    const CompareResult r = run_compare(parse_config(doc));
    CHECK(r.curves[0].back() <= 1e-12);
    CHECK(r.curves[1].back() > 0.1);
  }
  SUBCASE("deterministic bytes") {
    const json doc = json::parse(R"({
      "graph": {"kind": "k_regular", "n": 20, "degree": 4},
      "misbehaving": {"count": 2},
      "misbehavior": {"bias_range": [2, 6], "q": 0.5},
      "protocol": {"lambda": "auto"},
      "horizon": 30, "trials": 100, "seed": 5})");
    const std::string a = run(cmd_compare, doc);
    CHECK(a == run(cmd_compare, doc));
    const auto rows = parse_csv(a);
    CHECK(rows[0] == std::vector<std::string>{"k", "protocol", "cost"});
    CHECK(rows.size() == 1 + 4 * 31);
  }
}

TEST_CASE("mc-validate") {
  const auto rows = parse_csv(run(cmd_mc_validate, two_node_doc()));
  CHECK(rows[0] == std::vector<std::string>{"lambda", "analytic", "mc_mean", "mc_stderr", "z", "status"});
  REQUIRE(rows.size() == 6);
  for (std::size_t k = 1; k < rows.size(); ++k) {
    CHECK(std::stod(rows[k][4]) < 3.0);
    CHECK(rows[k][5] == "PASS");
  }
  CHECK(std::stod(rows[3][1]) == doctest::Approx(0.5 + 0.25 * 2 + 0.25 * 1));

  json tight = two_node_doc();
  tight["z_threshold"] = 1e-9;
  tight["trials"] = 200;
  run(cmd_mc_validate, tight, kExitValidation);

  json fixed = two_node_doc();
  fixed["misbehavior"] = json::parse(R"({"fixed_bias": [2.5], "q": 0})");
  fixed["lambdas"] = {0.5};
  const auto f = parse_csv(run(cmd_mc_validate, fixed));
  CHECK(std::stod(f[1][1]) == doctest::Approx(0.5 + 0.25 * 2.5 * 2.5));
}

TEST_CASE("sweep") {
  SUBCASE("density") {
    const json doc = json::parse(R"({"graph": {"kind": "k_regular", "n": 30, "degree": 3},
      "sweep": {"axis": "density", "values": [3, 4, 5, 6], "n": 100, "samples": 8}, "seed": 2})");
    const auto rows = parse_csv(run(cmd_sweep, doc));
    REQUIRE(rows.size() == 5);
    for (std::size_t k = 2; k < rows.size(); ++k) CHECK(std::stod(rows[k][2]) < std::stod(rows[k - 1][2]));
  }
  SUBCASE("q axis") {
    const json doc = json::parse(R"({"graph": {"kind": "k_regular", "n": 30, "degree": 3},
      "misbehaving": {"ids": [1]}, "misbehavior": {"d": 1},
      "sweep": {"axis": "q", "values": [0, 10, 1000000]}, "seed": 2})");
    const auto rows = parse_csv(run(cmd_sweep, doc));
    CHECK(rows[0] == std::vector<std::string>{"q", "lambda_star", "e_star"});
    CHECK(std::stod(rows[3][1]) >= 0.99);
  }
  SUBCASE("M axis") {
    const json doc = json::parse(R"({"graph": {"kind": "k_regular", "n": 30, "degree": 3},
      "misbehavior": {"d": 5}, "sweep": {"axis": "M", "values": [1, 2, 4]}, "seed": 2})");
    const auto rows = parse_csv(run(cmd_sweep, doc));
    REQUIRE(rows.size() == 4);
    CHECK(std::stod(rows[3][2]) > std::stod(rows[1][2]));
  }
  SUBCASE("lambda axis") {
    const json doc = json::parse(R"({"graph": {"kind": "k_regular", "n": 30, "degree": 3},
      "misbehaving": {"ids": [1]}, "sweep": {"axis": "lambda", "values": [0.1, 0.5, 1]}, "seed": 2})");
    CHECK(parse_csv(run(cmd_sweep, doc)).size() == 4);
  }
  CHECK_THROWS_AS(cmd_sweep(parse_config(json::parse(R"({"graph": {"kind": "k_regular", "n": 30, "degree": 3}})")),
                            std::cout),
                  ConfigError);
}

TEST_CASE("gramian and prune") {
  const json doc = json::parse(R"({"graph": {"kind": "k_regular", "n": 30, "degree": 4},
    "misbehaving": {"ids": [1]}, "lambda_resolution": 32, "seed": 5})");
  const auto rows = parse_csv(run(cmd_gramian, doc));
  REQUIRE(rows.size() == 33);
  for (std::size_t k = 2; k < rows.size(); ++k) CHECK(std::stod(rows[k][2]) < std::stod(rows[k - 1][2]));

  const json prune = json::parse(R"({"graph": {"kind": "k_regular", "n": 20, "degree": 4},
    "objective": {"lambda": 0.2}, "seed": 5})");
  const auto trace = parse_csv(run(cmd_prune, prune));
  CHECK(trace.front() == std::vector<std::string>{"step", "edge_u", "edge_v", "value"});
  CHECK(trace.back()[0] == "matching");
}

}  // TEST_SUITE
