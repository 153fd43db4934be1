// Parallel kernels against the serial reference.

#include <benchmark/benchmark.h>

#include <vector>

#include "motionlm/core/random.hpp"
#include "motionlm/numeric/kernels.hpp"

namespace kernels = motionlm::kernels;

namespace {

std::vector<float> random_values(std::size_t n, std::uint64_t seed) {
  motionlm::Rng rng(seed);
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
  return v;
}

template <bool Parallel>
void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_values(n * n, 1), b = random_values(n * n, 2);
  std::vector<float> c(n * n);
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::matmul(a.data(), b.data(), c.data(), n, n, n);
    else
      kernels::reference::matmul(a.data(), b.data(), c.data(), n, n, n);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}

template <bool Parallel>
void BM_Attention(benchmark::State& state) {
  const auto l = static_cast<std::size_t>(state.range(0));
  const std::size_t d = 64, heads = 4;
  const auto q = random_values(l * d, 3), k = random_values(l * d, 4), v = random_values(l * d, 5);
  std::vector<float> out(l * d);
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::attention(q.data(), k.data(), v.data(), nullptr, out.data(), static_cast<float*>(nullptr),
                         l, l, d, heads);
    else
      kernels::reference::attention(q.data(), k.data(), v.data(), nullptr, out.data(),
                                    static_cast<float*>(nullptr), l, l, d, heads);
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Parallel>
void BM_LayerNorm(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const std::size_t cols = 64;
  const auto x = random_values(rows * cols, 6);
  const std::vector<float> gain(cols, 1.0f), bias(cols, 0.0f);
  std::vector<float> y(rows * cols);
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::layer_norm_rows(x.data(), gain.data(), bias.data(), y.data(),
                               static_cast<float*>(nullptr), static_cast<float*>(nullptr), rows,
                               cols, 1e-5f);
    else
      kernels::reference::layer_norm_rows(x.data(), gain.data(), bias.data(), y.data(),
                                          static_cast<float*>(nullptr),
                                          static_cast<float*>(nullptr), rows, cols, 1e-5f);
    benchmark::DoNotOptimize(y.data());
  }
}

}  // namespace

BENCHMARK(BM_Matmul<true>)->Name("matmul/parallel")->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(BM_Matmul<false>)->Name("matmul/reference")->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(BM_Attention<true>)->Name("attention/parallel")->Arg(32)->Arg(128);
BENCHMARK(BM_Attention<false>)->Name("attention/reference")->Arg(32)->Arg(128);
BENCHMARK(BM_LayerNorm<true>)->Name("layer_norm/parallel")->Arg(256)->Arg(4096);
BENCHMARK(BM_LayerNorm<false>)->Name("layer_norm/reference")->Arg(256)->Arg(4096);

BENCHMARK_MAIN();
