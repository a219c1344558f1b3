#include <complex>
#include <cstddef>
#include <numeric>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "kdmd/kernels.hpp"

namespace {

using kdmd::cplx;

std::vector<cplx> random_points(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.1, 1.1);
  std::vector<cplx> p(n);
  for (auto& z : p) z = {u(rng), u(rng)};
  return p;
}

template <auto Kernel>
void BM_KdeSum(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto points = random_points(n, 1);
  const auto queries = random_points(4096, 2);
  std::vector<double> out(queries.size());
  for (auto _ : state) {
    Kernel(points, {}, 2.5e-2, queries, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * queries.size()));
}

template <auto Kernel>
void BM_Reconstruct(benchmark::State& state) {
  const auto d = state.range(0);
  const Eigen::MatrixXcd modes = Eigen::MatrixXcd::Random(d, 40);
  const Eigen::MatrixXcd coeffs = Eigen::MatrixXcd::Random(40, 145);
  for (auto _ : state) {
    auto r = Kernel(modes, coeffs);
    benchmark::DoNotOptimize(r.real.data());
  }
  state.SetItemsProcessed(state.iterations() * d * 145);
}

template <auto Kernel>
void BM_StackVelocity(benchmark::State& state) {
  const auto cells = static_cast<std::size_t>(state.range(0));
  std::vector<double> ux(cells), uy(cells), uz(cells);
  std::iota(ux.begin(), ux.end(), 0.0);
  std::iota(uy.begin(), uy.end(), 1.0);
  std::iota(uz.begin(), uz.end(), 2.0);
  std::vector<std::size_t> ocean(cells);
  std::iota(ocean.begin(), ocean.end(), std::size_t{0});
  const std::vector<int> kinds{0, 1, 2, 3};
  const std::vector<double> weights{1.0, 1.0, 10.0, 0.5};
  std::vector<double> out(cells * kinds.size());
  for (auto _ : state) {
    Kernel(ux, uy, uz, ocean, kinds, weights, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(out.size()));
}

}  // namespace

BENCHMARK(BM_KdeSum<kdmd::serial::kde_sum>)->Name("kde_sum/serial")->Arg(256)->Arg(4096);
BENCHMARK(BM_KdeSum<kdmd::parallel::kde_sum>)->Name("kde_sum/parallel")->Arg(256)->Arg(4096);
BENCHMARK(BM_Reconstruct<kdmd::serial::reconstruct>)->Name("reconstruct/serial")->Arg(1024)->Arg(16384);
BENCHMARK(BM_Reconstruct<kdmd::parallel::reconstruct>)->Name("reconstruct/parallel")->Arg(1024)->Arg(16384);
BENCHMARK(BM_StackVelocity<kdmd::serial::stack_velocity>)->Name("stack_velocity/serial")->Arg(1 << 16)->Arg(1 << 20);
BENCHMARK(BM_StackVelocity<kdmd::parallel::stack_velocity>)->Name("stack_velocity/parallel")->Arg(1 << 16)->Arg(1 << 20);

BENCHMARK_MAIN();
