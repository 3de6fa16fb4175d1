#include "densefactor/hypergraph.hpp"
#include "densefactor/instance.hpp"
#include "densefactor/mp_engine.hpp"
#include "densefactor/replica.hpp"
#include "densefactor/state_evolution.hpp"

#include <benchmark/benchmark.h>

namespace df = densefactor;

namespace {

df::Instance make_instance(int p, int N, int M, int c) {
  const auto g = df::sample_regular(N, p, c, 1);
  const auto prior = p == 2 ? df::Prior::Ising : df::Prior::Gaussian;
  const auto spreading = p == 2 ? df::Spreading::Rademacher : df::Spreading::Deterministic;
  return df::generate_instance(g, M, 2.0, prior, df::Channel::additive(1.0), spreading, 2);
}

void BM_GampSweep(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  const auto inst = make_instance(p, 1008, 100, p == 2 ? 160 : 500);
  auto st = df::init_gamp(df::InitScheme::uninformative(0.1), inst, 3);
  for (auto _ : state) benchmark::DoNotOptimize(df::gamp_sweep(st, inst, 0.5));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(inst.graph.n_slots()) * inst.m_dim);
}
BENCHMARK(BM_GampSweep)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_RbpSweep(benchmark::State& state) {
  const auto inst = make_instance(2, 1000, 100, 80);
  auto st = df::init_rbp(df::InitScheme::uninformative(0.1), inst, 3);
  for (auto _ : state) benchmark::DoNotOptimize(df::rbp_sweep(st, inst, 0.5));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(inst.graph.n_slots()) * inst.m_dim);
}
BENCHMARK(BM_RbpSweep)->Unit(benchmark::kMillisecond);

void BM_SeStep(benchmark::State& state) {
  df::SEModel mod;
  mod.prior = state.range(0) == 0 ? df::Prior::Ising : df::Prior::Gaussian;
  mod.channel = state.range(0) == 2 ? df::Channel::sign() : df::Channel::additive(1.0);
  mod.lambda = 2.0;
  mod.species = {{2, 1.6}};
  df::SEState s;
  s.m = s.q = 0.4;
  for (auto _ : state) benchmark::DoNotOptimize(df::se_step(s, mod));
}
BENCHMARK(BM_SeStep)->Arg(0)->Arg(1)->Arg(2);

void BM_SolveEos(benchmark::State& state) {
  const auto fam = state.range(0) == 0 ? df::ModelFamily::ising_gauss(2) : df::ModelFamily::gauss_gauss(3);
  const double alpha = state.range(0) == 0 ? 1.6 : 5.0;
  for (auto _ : state) benchmark::DoNotOptimize(df::solve_eos(fam, alpha, 2.0));
}
BENCHMARK(BM_SolveEos)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_SampleRegular(benchmark::State& state) {
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(df::sample_regular(1008, static_cast<int>(state.range(0)), 50, seed++));
}
BENCHMARK(BM_SampleRegular)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
