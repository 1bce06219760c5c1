#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include <omp.h>

#include "fjres/error.hpp"
#include "fjres/netdesign.hpp"
#include "support.hpp"

using namespace fjres;
using fjres::test::max_abs;

namespace {

double brute_worst(const Network& net, const DesignObjective& obj) {
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < net.size(); ++i) best = std::max(best, obj.evaluate(mark_misbehaving(net, {net.label(i)})));
  return best;
}

std::vector<DesignObjective> objectives() {
  std::vector<DesignObjective> out(4);
  out[1].lambda = 0.4;
  out[1].q = 2.0;
  out[2].prior.kind = PriorKind::ExpDecay;
  out[2].prior.rate = 1.5;
  out[2].lambda = 0.2;
  out[3].kind = ObjectiveKind::GramianTrace;
  out[3].lambda = 0.1;
  return out;
}

}  // namespace

TEST_SUITE("netdesign") {

TEST_CASE("worst-case attacker on symmetric graphs") {
  const Network c = test::cycle(9);
  for (const auto& obj : objectives()) {
    const auto values = attacker_values(c, obj);
    for (double v : values) CHECK(v == doctest::Approx(values[0]).epsilon(1e-9));
    CHECK(worst_case_attacker(c, obj).node == 1);
  }
  const Network s = test::star(7);
  for (const auto& obj : objectives()) {
    const auto values = attacker_values(s, obj);
    for (int i = 1; i < 7; ++i) CHECK(values[0] > values[i]);
    CHECK(worst_case_attacker(s, obj).node == 1);
  }
}

TEST_CASE("worst-case attacker equals exhaustive search") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const Network net = generate(GraphSpec::erdos_renyi(18 + static_cast<int>(seed) * 8, 0.2, seed));
    for (const auto& obj : objectives()) {
      const auto fast = attacker_values(net, obj);
      const auto ref = attacker_values_serial(net, obj);
      REQUIRE(fast.size() == ref.size());
      for (std::size_t i = 0; i < fast.size(); ++i) {
        CHECK(std::abs(fast[i] - ref[i]) <= 1e-9 * std::max(1.0, std::abs(ref[i])));
        CHECK(std::abs(ref[i] - obj.evaluate(mark_misbehaving(net, {net.label(static_cast<int>(i))}))) == 0.0);
      }
      const AttackerChoice w = worst_case_attacker(net, obj);
      CHECK(w.value == doctest::Approx(brute_worst(net, obj)).epsilon(1e-9));
      CHECK(w.node == worst_case_attacker_serial(net, obj).node);
    }
  }
  CHECK_THROWS_AS(worst_case_attacker(test::two_node(), DesignObjective{}), InvalidArgument);
}

TEST_CASE("connectivity sweep") {
  SweepSpec spec;
  spec.n = 100;
  spec.densities = {3, 6};
  spec.samples = 6;
  spec.seed = 4;
  const int saved = omp_get_max_threads();
  omp_set_num_threads(3);
  const auto par = connectivity_sweep(spec);
  omp_set_num_threads(1);
  const auto one = connectivity_sweep(spec);
  omp_set_num_threads(saved);
  const auto ser = connectivity_sweep_serial(spec);
  REQUIRE(par.size() == 2);
  for (int k = 0; k < 2; ++k) {
    CHECK(par[k].mean == one[k].mean);
    CHECK(par[k].std_error == one[k].std_error);
    CHECK(par[k].mean == doctest::Approx(ser[k].mean).epsilon(1e-9));
    CHECK(par[k].samples == 6);
  }
  CHECK(par[0].mean > par[1].mean);

  spec.policy = AttackerPolicy::Random;
  spec.random_count = 5;
  spec.densities = {3, 8};
  const auto random = connectivity_sweep(spec);
  CHECK(random[0].mean > random[1].mean);

  spec.densities = {4};
  std::stringstream ss;
  write_sweep_csv(connectivity_sweep(spec), ss);
  std::string header, row;
  std::getline(ss, header);
  std::getline(ss, row);
  CHECK(header == "density_or_step,objective_kind,mean,stderr");
  CHECK(row.rfind("4,consensus_error,", 0) == 0);

  SweepSpec er;
  er.family = GraphKind::ErdosRenyi;
  er.n = 30;
  er.densities = {0.15, 0.5};
  er.samples = 8;
  const auto er_rows = connectivity_sweep(er);
  CHECK(er_rows[0].mean > er_rows[1].mean);
}

TEST_CASE("greedy pruning") {
  const Network net = generate(GraphSpec::k_regular(16, 4, 6));
  DesignObjective obj;
  obj.lambda = 0.2;

  // exhaustive min-max over feasible first removals
  double best = std::numeric_limits<double>::infinity();
  Edge best_edge{};
  for (Edge e : feasible_removals(net, 4)) {
    const double v = brute_worst(remove_edge(net, e), obj);
    if (v < best * (1 - 1e-9)) best = v, best_edge = e;
  }

  const PruneTrace trace = greedy_prune(net, obj, 100);
  REQUIRE(!trace.steps.empty());
  CHECK(trace.steps[0].value == doctest::Approx(best).epsilon(1e-9));
  CHECK(trace.steps[0].edge_u == best_edge.u + 1);
  CHECK(trace.steps[0].edge_v == best_edge.v + 1);
  CHECK(trace.initial_value == doctest::Approx(brute_worst(net, obj)));
  CHECK(trace.steps.size() <= 8);
  for (const PruneStep& s : trace.steps)
    for (const auto& [deg, count] : s.degree_histogram) CHECK((deg == 3 || deg == 4));
  CHECK(trace.final_network.connected());
  CHECK(feasible_removals(trace.final_network, 4).empty());

  const PruneTrace two = greedy_prune(net, obj, 2);
  CHECK(two.steps.size() == 2);

  const MatchingBaseline base = matching_baseline(net, obj);
  CHECK(base.removed == 8);
  std::stringstream ss;
  write_prune_csv(trace, &base, ss);
  std::string line, last;
  std::getline(ss, line);
  CHECK(line == "step,edge_u,edge_v,value");
  std::getline(ss, line);
  CHECK(line.rfind("0,,,", 0) == 0);
  while (std::getline(ss, line)) last = line;
  CHECK(last.rfind("matching,,,", 0) == 0);

  const MatchingBaseline c4 = matching_baseline(test::cycle(4), obj);
  CHECK(c4.removed == 2);
  CHECK(std::isfinite(c4.value));
  CHECK_THROWS_AS(matching_baseline(test::cycle(5), obj), InvalidArgument);
}

}  // TEST_SUITE
