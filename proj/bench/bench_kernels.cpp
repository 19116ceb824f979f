#include <benchmark/benchmark.h>

#include "topoforge/dataset.hpp"
#include "topoforge/kernels.hpp"
#include "topoforge/liftings.hpp"
#include "topoforge/rng.hpp"

using namespace topoforge;

namespace {

DenseMatrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  DenseMatrix m(r, c);
  for (double& v : m.values()) v = rng.uniform(-1.0, 1.0);
  return m;
}

SparseOperator random_operator(std::size_t n, std::size_t per_row, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<SparseEntry> e;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < per_row; ++k) e.push_back({i, rng.below(n), 1.0});
  return SparseOperator::from_triplets(n, n, e, {}, true);
}

template <bool Parallel>
void BM_matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_matrix(n, 64, 1), b = random_matrix(64, 64, 2);
  for (auto _ : state)
    benchmark::DoNotOptimize(Parallel ? kernels::parallel::matmul(a, b) : kernels::serial::matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * 64 * 64));
}

template <bool Parallel>
void BM_spmm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto s = random_operator(n, 8, 3);
  const auto x = random_matrix(n, 32, 4);
  for (auto _ : state)
    benchmark::DoNotOptimize(Parallel ? kernels::parallel::spmm(s, x) : kernels::serial::spmm(s, x));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.nnz() * 32));
}

template <bool Parallel>
void BM_clique(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Graph g = erdos_renyi(n, 12.0 / static_cast<double>(n), 5);
  for (auto _ : state) benchmark::DoNotOptimize(Parallel ? lift_clique_parallel(g, 3) : lift_clique(g, 3));
}

}  // namespace

BENCHMARK(BM_matmul<false>)->Name("matmul/serial")->Arg(1024)->Arg(8192);
BENCHMARK(BM_matmul<true>)->Name("matmul/parallel")->Arg(1024)->Arg(8192);
BENCHMARK(BM_spmm<false>)->Name("spmm/serial")->Arg(4096)->Arg(65536);
BENCHMARK(BM_spmm<true>)->Name("spmm/parallel")->Arg(4096)->Arg(65536);
BENCHMARK(BM_clique<false>)->Name("clique/serial")->Arg(1000)->Arg(5000);
BENCHMARK(BM_clique<true>)->Name("clique/parallel")->Arg(1000)->Arg(5000);

BENCHMARK_MAIN();
