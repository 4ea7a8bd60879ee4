// SPDX-License-Identifier: Apache-2.0
//
// Microbenchmarks for the per-step cost of navigation and training on the
// default architecture (d=16, n_c=4, 6 blocks of 64).
#include <benchmark/benchmark.h>

#include "sgf/navigator.hpp"
#include "sgf/oracle.hpp"
#include "sgf/trainer.hpp"

namespace {

using namespace sgf;

AuxMap default_map() {
  Rng rng(1);
  return AuxMap::init(ArchConfig{}, rng);
}

struct Point {
  Vector z;
  Vector c;
};

Point point() {
  Rng rng(2);
  return {sample_gaussian(rng, 16), Vector{0.2, 0.7, 0.4, 0.9}};
}

void BM_Forward(benchmark::State& state) {
  const AuxMap f = default_map();
  const Point p = point();
  for (auto _ : state) benchmark::DoNotOptimize(f.forward(p.z, p.c));
}
BENCHMARK(BM_Forward);

void BM_JvpZ(benchmark::State& state) {
  const AuxMap f = default_map();
  const Point p = point();
  const Vector dir(16, 0.25);
  for (auto _ : state) benchmark::DoNotOptimize(f.jvp_z(p.z, p.c, dir));
}
BENCHMARK(BM_JvpZ);

void BM_Backward(benchmark::State& state) {
  const AuxMap f = default_map();
  const Point p = point();
  const Vector g(16, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(f.backward(p.z, p.c, g));
}
BENCHMARK(BM_Backward);

// Arg 0 is the exact solve, anything else the Neumann order.
void BM_SurrogateField(benchmark::State& state) {
  const AuxMap f = default_map();
  const Point p = point();
  const Vector delta{0.1, 0.0, 0.0, 0.0};
  NavConfig cfg;
  if (state.range(0) == 0) {
    cfg.inverse = InverseMode::kExact;
  } else {
    cfg.neumann_order = static_cast<std::size_t>(state.range(0));
  }
  for (auto _ : state) benchmark::DoNotOptimize(surrogate_field(f, p.z, p.c, delta, cfg));
}
BENCHMARK(BM_SurrogateField)->Arg(0)->Arg(1)->Arg(5)->Arg(20);

// Arg 1 selects the fast variant: one oracle call instead of one per step.
void BM_Navigate(benchmark::State& state) {
  const AuxMap f = default_map();
  auto oracle = build_oracle(OracleSpec::parse("sigmoid-attrs:d=16,nc=4,seed=7"));
  const Point p = point();
  const Vector c1{0.8, 0.1, 0.5, 0.5};
  NavConfig cfg;
  cfg.max_steps = 50;
  cfg.converge_tol = 1e-9;
  cfg.fast = state.range(0) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(navigate(f, *oracle, p.z, c1, cfg));
}
BENCHMARK(BM_Navigate)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_TrainIterations(benchmark::State& state) {
  auto oracle = build_oracle(OracleSpec::parse("sigmoid-attrs:d=16,nc=4,seed=7"));
  Rng rng(3);
  const PairDataset data = build_dataset(*oracle, 2000, rng);
  TrainConfig cfg;
  cfg.iterations = 100;
  cfg.diag_interval = 100;
  for (auto _ : state) benchmark::DoNotOptimize(train(data, ArchConfig{}, cfg));
  state.SetItemsProcessed(state.iterations() * 100);
}
BENCHMARK(BM_TrainIterations)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
