// Parallel kernels and ensembles against their serial references.
//   ./bench_contagion --benchmark_filter=RowSums

#include <benchmark/benchmark.h>
#include <omp.h>

#include <random>
#include <vector>

#include "contagion/ingest.hpp"
#include "contagion/kernels.hpp"
#include "contagion/montecarlo.hpp"

using namespace contagion;

namespace {

std::vector<double> values(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1e6);
  std::vector<double> v(count);
  for (auto& x : v) x = u(rng);
  return v;
}

void threads(const benchmark::State& state, bool reference) {
  if (!reference) omp_set_num_threads(static_cast<int>(state.range(1)));
}

template <bool Reference>
void RowSums(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  threads(state, Reference);
  const auto m = values(n * n, 1);
  std::vector<double> out(n);
  for (auto _ : state) {
    if constexpr (Reference) {
      kernels::reference::row_sums(m, n, out);
    } else {
      kernels::row_sums(m, n, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}

template <bool Reference>
void ColumnSums(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  threads(state, Reference);
  const auto m = values(n * n, 2);
  std::vector<double> out(n);
  for (auto _ : state) {
    if constexpr (Reference) {
      kernels::reference::column_sums(m, n, out);
    } else {
      kernels::column_sums(m, n, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}

template <bool Reference>
void ExpectedDensity(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  threads(state, Reference);
  const auto x = values(n, 3), y = values(n, 4);
  for (auto _ : state) {
    double d;
    if constexpr (Reference) {
      d = kernels::reference::expected_density(x, y, 1e-12);
    } else {
      d = kernels::expected_density(x, y, 1e-12);
    }
    benchmark::DoNotOptimize(d);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}

template <bool Reference>
void ScaleRowsColumns(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  threads(state, Reference);
  auto m = values(n * n, 5);
  std::vector<double> f(n, 1.0000001), g(n, 0.9999999);
  for (auto _ : state) {
    if constexpr (Reference) {
      kernels::reference::scale_rows(m, n, f);
      kernels::reference::scale_columns(m, n, g);
    } else {
      kernels::scale_rows(m, n, f);
      kernels::scale_columns(m, n, g);
    }
    benchmark::DoNotOptimize(m.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n));
}

template <bool Reference>
void Ensemble(benchmark::State& state) {
  const auto records = generate_synthetic({});
  Parameters p;
  EnsembleConfig c;
  c.realizations = static_cast<std::size_t>(state.range(0));
  c.parallelism = Reference ? 1 : static_cast<int>(state.range(1));
  const auto policy = ShockPolicy::parse("random");
  for (auto _ : state) {
    auto r = Reference ? run_ensemble_serial(records, p, policy, c)
                       : run_ensemble(records, p, policy, c);
    benchmark::DoNotOptimize(r.report.t_c.mean);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void kernel_args(benchmark::internal::Benchmark* b) {
  for (int n : {183, 512, 1024}) {
    for (int t : {1, 2, 4, 8}) b->Args({n, t});
  }
  b->UseRealTime();
}

void reference_args(benchmark::internal::Benchmark* b) {
  for (int n : {183, 512, 1024}) b->Args({n, 1});
  b->UseRealTime();
}

}  // namespace

BENCHMARK(RowSums<true>)->Apply(reference_args)->Name("RowSums/reference");
BENCHMARK(RowSums<false>)->Apply(kernel_args)->Name("RowSums/parallel");
BENCHMARK(ColumnSums<true>)->Apply(reference_args)->Name("ColumnSums/reference");
BENCHMARK(ColumnSums<false>)->Apply(kernel_args)->Name("ColumnSums/parallel");
BENCHMARK(ExpectedDensity<true>)->Apply(reference_args)->Name("ExpectedDensity/reference");
BENCHMARK(ExpectedDensity<false>)->Apply(kernel_args)->Name("ExpectedDensity/parallel");
BENCHMARK(ScaleRowsColumns<true>)->Apply(reference_args)->Name("ScaleRowsColumns/reference");
BENCHMARK(ScaleRowsColumns<false>)->Apply(kernel_args)->Name("ScaleRowsColumns/parallel");
BENCHMARK(Ensemble<true>)->Args({16, 1})->Name("Ensemble/serial")->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(Ensemble<false>)
    ->Args({16, 1})
    ->Args({16, 2})
    ->Args({16, 4})
    ->Args({16, 8})
    ->Name("Ensemble/parallel")
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();

BENCHMARK_MAIN();
