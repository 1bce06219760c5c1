// Serial reference against the OpenMP kernel for each parallel loop.

#include <benchmark/benchmark.h>

#include "fjres/analysis.hpp"
#include "fjres/gramian.hpp"
#include "fjres/netdesign.hpp"

using namespace fjres;

namespace {

Network attacked(int n, int degree) {
  return mark_misbehaving(generate(GraphSpec::k_regular(n, degree, 17)), {1, n / 2});
}

void BM_MonteCarlo(benchmark::State& state) {
  const Network net = attacked(60, 4);
  const PriorModel prior = PriorModel::identity(60);
  const MisbehaviorModel mis = MisbehaviorModel::scalar(2, 4.0, 1.0);
  ProtocolParams params;
  params.lambda = 0.3;
  const bool parallel = state.range(0) != 0;
  for (auto _ : state) {
    const MCEstimate e = parallel ? mc_cost(net, Protocol::FJ, params, prior, mis, 60, 400, 5)
                                  : mc_cost_serial(net, Protocol::FJ, params, prior, mis, 60, 400, 5);
    benchmark::DoNotOptimize(e.mean_cost);
  }
}

void BM_ErrorCurve(benchmark::State& state) {
  const Network net = attacked(60, 3);
  const ErrorModel model(net, PriorModel::exp_decay(net, 10.0, 0.2), MisbehaviorModel::scalar(2, 10.0, 1.0));
  const std::vector<double> grid = lambda_grid(64);
  const bool parallel = state.range(0) != 0;
  for (auto _ : state) {
    auto curve = parallel ? error_curve(model, grid) : error_curve_serial(model, grid);
    benchmark::DoNotOptimize(curve.data());
  }
}

void BM_AttackerValues(benchmark::State& state) {
  const Network net = generate(GraphSpec::k_regular(80, 4, 3));
  DesignObjective obj;
  obj.q = 1.0;
  const bool parallel = state.range(0) != 0;
  for (auto _ : state) {
    auto v = parallel ? attacker_values(net, obj) : attacker_values_serial(net, obj);
    benchmark::DoNotOptimize(v.data());
  }
}

void BM_ConnectivitySweep(benchmark::State& state) {
  SweepSpec spec;
  spec.n = 50;
  spec.densities = {3, 5};
  spec.samples = 8;
  const bool parallel = state.range(0) != 0;
  for (auto _ : state) {
    auto rows = parallel ? connectivity_sweep(spec) : connectivity_sweep_serial(spec);
    benchmark::DoNotOptimize(rows.data());
  }
}

void BM_GramianCurve(benchmark::State& state) {
  const Network net = attacked(80, 4);
  std::vector<double> grid;
  for (int k = 0; k < 32; ++k) grid.push_back(k / 32.0);
  const int K = resolve_k(net, KPolicy::Reachability, 0);
  const bool parallel = state.range(0) != 0;
  for (auto _ : state) {
    auto curve = parallel ? gramian_trace_curve(net, grid, K) : gramian_trace_curve_serial(net, grid, K);
    benchmark::DoNotOptimize(curve.data());
  }
}

}  // namespace

// Arg 0: serial reference, Arg 1: OpenMP
BENCHMARK(BM_MonteCarlo)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ErrorCurve)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AttackerValues)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConnectivitySweep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GramianCurve)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
