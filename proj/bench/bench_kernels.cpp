// Parallel kernels against their serial paths and the dense reference.

#include <benchmark/benchmark.h>

#include <random>

#include "dws/kernels.hpp"
#include "dws/ramp.hpp"

namespace {

using namespace dws;

Grid bench_grid(int n) { return cell_grid(defaults::final_params(), n); }

cvec random_state(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  cvec v(static_cast<std::size_t>(n) * n);
  for (auto& x : v) x = cplx(d(rng), d(rng));
  return v;
}

void contact_kinetic(benchmark::State& state, Exec exec) {
  const int n = static_cast<int>(state.range(0));
  const ContactKineticBlocks blocks(bench_grid(n), 1.2);
  const auto ph = blocks.phases(0.01);
  std::array<cvec, 2> comps{random_state(n, 1), random_state(n, 2)};
  std::array<cplx*, 2> ptr{comps[0].data(), comps[1].data()};
  for (auto _ : state) {
    blocks.apply(ptr, ph, exec);
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * 2 * n * n);
}

void BM_ContactKineticParallel(benchmark::State& s) { contact_kinetic(s, Exec::parallel); }
void BM_ContactKineticSerial(benchmark::State& s) { contact_kinetic(s, Exec::serial); }

void BM_ContactKineticReference(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const ContactKineticReference ref(bench_grid(n), 1.2);
  cvec a = random_state(n, 1), b = random_state(n, 2);
  for (auto _ : state) {
    ref.apply(a.data(), 0.01);
    ref.apply(b.data(), 0.01);
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * 2 * n * n);
}

void separable_phase(benchmark::State& state, Exec exec) {
  const int n = static_cast<int>(state.range(0));
  cvec psi = random_state(n, 3), a(n), b(n);
  for (int j = 0; j < n; ++j) a[j] = b[j] = std::polar(1.0, 0.01 * j);
  for (auto _ : state) {
    apply_separable_phase(psi.data(), a.data(), b.data(), n, exec);
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * n * n);
}

void BM_SeparablePhaseParallel(benchmark::State& s) { separable_phase(s, Exec::parallel); }
void BM_SeparablePhaseSerial(benchmark::State& s) { separable_phase(s, Exec::serial); }

void mode_weight_bench(benchmark::State& state, Exec exec) {
  const int n = static_cast<int>(state.range(0));
  const Grid g = bench_grid(n);
  const cvec psi = random_state(n, 4);
  std::vector<double> phi(n, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(mode_weight(psi.data(), phi.data(), n, g.dx(), exec));
  state.SetItemsProcessed(state.iterations() * n * n);
}

void BM_ModeWeightParallel(benchmark::State& s) { mode_weight_bench(s, Exec::parallel); }
void BM_ModeWeightSerial(benchmark::State& s) { mode_weight_bench(s, Exec::serial); }

}  // namespace

BENCHMARK(BM_ContactKineticParallel)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ContactKineticSerial)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ContactKineticReference)->Arg(64)->Arg(128)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SeparablePhaseParallel)->Arg(128)->Arg(256)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SeparablePhaseSerial)->Arg(128)->Arg(256)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ModeWeightParallel)->Arg(128)->Arg(256)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ModeWeightSerial)->Arg(128)->Arg(256)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
