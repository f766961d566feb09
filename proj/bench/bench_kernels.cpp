// Serial reference vs OpenMP for the parallel kernels.

#include <random>

#include <benchmark/benchmark.h>

#include "reopt/kernels.hpp"
#include "reopt/solver.hpp"

using namespace reopt;

namespace {

Matrix random_matrix(int r, int c, unsigned seed) {
  Matrix m(r, c);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  for (double& v : m.v) v = u(rng);
  return m;
}

Exec exec_of(const benchmark::State& s) { return s.range(1) ? Exec::OpenMP : Exec::Serial; }

void BM_LinearForward(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto X = random_matrix(n, 64, 1), W = random_matrix(64, 64, 2), b = random_matrix(1, 64, 3);
  Matrix Y(n, 64);
  for (auto _ : state) {
    linear_forward(X, W, b, Y, exec_of(state));
    benchmark::DoNotOptimize(Y.v.data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}

void BM_MeanAggregate(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(4);
  std::vector<int> src, dst;
  for (int d = 0; d < n; ++d)
    for (int k = 0; k < 30; ++k) {
      src.push_back(static_cast<int>(rng() % n));
      dst.push_back(d);
    }
  const auto adj = build_adjacency(src, dst, n);
  const auto S = random_matrix(n, 64, 5);
  Matrix out(n, 64);
  for (auto _ : state) {
    mean_aggregate(adj, S, out, exec_of(state));
    benchmark::DoNotOptimize(out.v.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(src.size()));
}

void BM_BinvUpdate(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  auto binv = random_matrix(m, m, 6).v;
  auto alpha = random_matrix(1, m, 7).v;
  alpha[m / 2] = 2.0;
  const auto update = state.range(1) ? binv_update_omp : binv_update_serial;
  for (auto _ : state) {
    update(binv.data(), m, alpha.data(), m / 2);
    benchmark::DoNotOptimize(binv.data());
  }
}

// second argument: 0 serial, 1 OpenMP
BENCHMARK(BM_LinearForward)->ArgsProduct({{1024, 8192}, {0, 1}});
BENCHMARK(BM_MeanAggregate)->ArgsProduct({{1024, 8192}, {0, 1}});
BENCHMARK(BM_BinvUpdate)->ArgsProduct({{256, 1024}, {0, 1}});

}  // namespace

BENCHMARK_MAIN();
