// Serial reference vs OpenMP kernels. Thread count follows OMP_NUM_THREADS or
// PHASECRIT_THREADS.

#include <benchmark/benchmark.h>

#include "phasecrit/graphs.hpp"
#include "phasecrit/oracle.hpp"
#include "phasecrit/poly.hpp"

using namespace phasecrit;

namespace {

const SpinModel kModel{0.15, 0.25, 3.0, 3};

void table(benchmark::State& st, Engine engine) {
  const BipartiteMultigraph g = sample_bipartite_regular(static_cast<int>(st.range(0)), 3, 7);
  for (auto _ : st) benchmark::DoNotOptimize(z_alpha_beta_table(g, kModel, engine).logZ);
}

void logz(benchmark::State& st, Engine engine) {
  const BipartiteMultigraph g = sample_bipartite_regular(static_cast<int>(st.range(0)), 3, 7);
  for (auto _ : st) benchmark::DoNotOptimize(partition_function(g, kModel, engine));
}

void BM_TableSerial(benchmark::State& st) { table(st, Engine::Serial); }
void BM_TableParallel(benchmark::State& st) { table(st, Engine::Parallel); }
void BM_LogZSerial(benchmark::State& st) { logz(st, Engine::Serial); }
void BM_LogZParallel(benchmark::State& st) { logz(st, Engine::Parallel); }

void BM_GadgetConditional(benchmark::State& st) {
  const GadgetGraph g = sample_gadget(12, 3, 0.1, 0.1, 3);
  const auto eta = eta_from_counts(g.params.m_prime, 1, 0);
  for (auto _ : st) benchmark::DoNotOptimize(gadget_conditional_Z(g, SpinModel::hardcore(3, 8.0), eta).logZ);
}

void BM_PolyPower(benchmark::State& st) {
  const MultiPoly p = MultiPoly::variable(MultiPoly::X) + MultiPoly::variable(MultiPoly::Y) + MultiPoly(1);
  for (auto _ : st) benchmark::DoNotOptimize(p.pow(static_cast<unsigned>(st.range(0))).size());
}

}  // namespace

BENCHMARK(BM_TableSerial)->DenseRange(10, 16, 2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TableParallel)->DenseRange(10, 16, 2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LogZSerial)->DenseRange(10, 18, 4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LogZParallel)->DenseRange(10, 18, 4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GadgetConditional)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PolyPower)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
