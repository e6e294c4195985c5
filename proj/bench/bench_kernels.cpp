// Parallel versus serial kernels on representative problem sizes.

#include <benchmark/benchmark.h>

#include <random>

#include "roomgraph/kernels.hpp"

using namespace roomgraph;

namespace {

std::vector<Vec3> random_points(std::size_t n, double extent, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, extent);
  std::vector<Vec3> pts(n);
  for (auto& p : pts) p = {u(rng), u(rng), u(rng) * 0.3};
  return pts;
}

std::vector<std::uint8_t> random_mask(int w, int h, double density, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution b(density);
  std::vector<std::uint8_t> m(static_cast<std::size_t>(w) * h);
  for (auto& v : m) v = b(rng) ? 1 : 0;
  return m;
}

template <bool Parallel>
void BM_ProjectCounts(benchmark::State& state) {
  const auto pts = random_points(static_cast<std::size_t>(state.range(0)), 20.0, 1);
  const GridSpec spec{-0.05, -0.05, 0.05, 402, 402};
  for (auto _ : state) {
    auto r = Parallel ? kernels::project_counts(pts, spec) : kernels::serial::project_counts(pts, spec);
    benchmark::DoNotOptimize(r.data());
  }
}

template <bool Parallel>
void BM_ErodeDisk(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto mask = random_mask(n, n, 0.9, 2);
  for (auto _ : state) {
    auto r = Parallel ? kernels::erode_disk(mask, n, n, 6.0) : kernels::serial::erode_disk(mask, n, n, 6.0);
    benchmark::DoNotOptimize(r.data());
  }
}

template <bool Parallel>
void BM_SquaredEdt(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto mask = random_mask(n, n, 0.02, 3);
  for (auto _ : state) {
    auto r = Parallel ? kernels::squared_edt(mask, n, n) : kernels::serial::squared_edt(mask, n, n);
    benchmark::DoNotOptimize(r.data());
  }
}

template <bool Parallel>
void BM_RadiusNeighbors(benchmark::State& state) {
  const auto pts = random_points(static_cast<std::size_t>(state.range(0)), 2.0, 4);
  for (auto _ : state) {
    auto r = Parallel ? kernels::radius_neighbors(pts, 0.08) : kernels::serial::radius_neighbors(pts, 0.08);
    benchmark::DoNotOptimize(r.data());
  }
}

template <bool Parallel>
void BM_DistanceHistogram(benchmark::State& state) {
  const auto pts = random_points(static_cast<std::size_t>(state.range(0)), 1.0, 5);
  for (auto _ : state) {
    auto r = Parallel ? kernels::distance_histogram(pts, 32, 2.0) : kernels::serial::distance_histogram(pts, 32, 2.0);
    benchmark::DoNotOptimize(r.data());
  }
}

template <bool Parallel>
void BM_DotMatrix(benchmark::State& state) {
  const std::size_t rows = static_cast<std::size_t>(state.range(0)), dim = 512;
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g;
  std::vector<double> a(rows * dim), b(rows * dim);
  for (auto& v : a) v = g(rng);
  for (auto& v : b) v = g(rng);
  for (auto _ : state) {
    auto r = Parallel ? kernels::dot_matrix(a, rows, b, rows, dim) : kernels::serial::dot_matrix(a, rows, b, rows, dim);
    benchmark::DoNotOptimize(r.data());
  }
}

}  // namespace

BENCHMARK(BM_ProjectCounts<false>)->Arg(1 << 20);
BENCHMARK(BM_ProjectCounts<true>)->Arg(1 << 20);
BENCHMARK(BM_ErodeDisk<false>)->Arg(512);
BENCHMARK(BM_ErodeDisk<true>)->Arg(512);
BENCHMARK(BM_SquaredEdt<false>)->Arg(1024);
BENCHMARK(BM_SquaredEdt<true>)->Arg(1024);
BENCHMARK(BM_RadiusNeighbors<false>)->Arg(100000);
BENCHMARK(BM_RadiusNeighbors<true>)->Arg(100000);
BENCHMARK(BM_DistanceHistogram<false>)->Arg(4096);
BENCHMARK(BM_DistanceHistogram<true>)->Arg(4096);
BENCHMARK(BM_DotMatrix<false>)->Arg(256);
BENCHMARK(BM_DotMatrix<true>)->Arg(256);

BENCHMARK_MAIN();
