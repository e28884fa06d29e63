// Microbenchmarks for the hot paths: divergences, the single-letter solver
// and exact error evaluation.

#include <benchmark/benchmark.h>

#include "twohop/code_model.hpp"
#include "twohop/divergence.hpp"
#include "twohop/schemes.hpp"
#include "twohop/single_letter.hpp"
#include "twohop/source.hpp"

namespace {

using namespace twohop;

void bench_kl(benchmark::State& state) {
  std::vector<double> p = {0.2, 0.3, 0.1, 0.4}, q = {0.25, 0.25, 0.25, 0.25};
  for (auto _ : state) benchmark::DoNotOptimize(kl_divergence(p, q));
}
BENCHMARK(bench_kl);

void bench_mutual_information(benchmark::State& state) {
  TwoHopSource s = TwoHopSource::dsbs(0.1, 0.1);
  for (auto _ : state)
    benchmark::DoNotOptimize(mutual_information(s.p_xyz(), {"X"}, {"Y"}));
}
BENCHMARK(bench_mutual_information);

void bench_solve_r(benchmark::State& state) {
  TwoHopSource s = TwoHopSource::dsbs(0.1, 0.1);
  SolverConfig cfg;
  cfg.restarts = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(solve_r(s, {1.0, 1.0, 1.0}, {}, cfg));
}
BENCHMARK(bench_solve_r)->Arg(4)->Arg(16);

void bench_exact_errors(benchmark::State& state) {
  TwoHopSource s = TwoHopSource::dsbs(0.1, 0.1);
  AuxCoupling aux = AuxCoupling::copy(s);
  int n = static_cast<int>(state.range(0));
  TwoHopCode code = build_quantize_bin(s, aux, n, {}, 0);
  for (auto _ : state) benchmark::DoNotOptimize(exact_errors(code, s));
}
BENCHMARK(bench_exact_errors)->Arg(4)->Arg(8);

void bench_mc_errors(benchmark::State& state) {
  TwoHopSource s = TwoHopSource::dsbs(0.1, 0.1);
  AuxCoupling aux = AuxCoupling::copy(s);
  TwoHopCode code = build_quantize_bin(s, aux, 6, {}, 0);
  for (auto _ : state) benchmark::DoNotOptimize(mc_errors(code, s, 10000, 1));
}
BENCHMARK(bench_mc_errors);

}  // namespace

BENCHMARK_MAIN();
