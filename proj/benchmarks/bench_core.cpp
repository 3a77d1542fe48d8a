#include <benchmark/benchmark.h>

#include <sisyphus/langevin.hpp>

using namespace sisyphus;

namespace {

const Lattice& lattice() {
  static const Lattice l(BeamConfig::for_depth(1000.0, -10.0));
  return l;
}

void BM_Diagonalize(benchmark::State& state) {
  Vec3 r(0.3, 1.1, 2.0);
  for (auto _ : state) {
    r.z() += 1e-3;
    benchmark::DoNotOptimize(diagonalize(lattice(), r));
  }
}
BENCHMARK(BM_Diagonalize);

void BM_LowestPotential(benchmark::State& state) {
  Vec3 r(0.3, 1.1, 2.0);
  for (auto _ : state) {
    r.z() += 1e-3;
    benchmark::DoNotOptimize(lowest_potential(lattice(), r));
  }
}
BENCHMARK(BM_LowestPotential);

void BM_PumpingRates(benchmark::State& state) {
  const AdiabaticFrame frame = diagonalize(lattice(), Vec3(0.3, 1.1, 2.0));
  for (auto _ : state) benchmark::DoNotOptimize(pumping_rates(lattice(), frame));
}
BENCHMARK(BM_PumpingRates);

void BM_CoefficientTable(benchmark::State& state) {
  const AdiabaticFrame frame = diagonalize(lattice(), Vec3(0.3, 1.1, 2.0));
  for (auto _ : state) benchmark::DoNotOptimize(coefficient_table(lattice(), frame));
}
BENCHMARK(BM_CoefficientTable);

void BM_IntegratorStep(benchmark::State& state) {
  const bool stochastic = state.range(0) != 0;
  const double dt = choose_step(lattice(), 1).dt;
  Integrator integ(lattice(), dt, stochastic);
  AtomState atom;
  atom.rng.reseed(1, 0);
  atom.position = Vec3(0.0, 0.0, 3.33);
  atom.momentum = Vec3(5, -3, 2);
  integ.attach(atom);
  for (auto _ : state) benchmark::DoNotOptimize(integ.step(atom));
}
BENCHMARK(BM_IntegratorStep)->Arg(0)->Arg(1);

}  // namespace
BENCHMARK_MAIN();
