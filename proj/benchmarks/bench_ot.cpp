#include <random>

#include <benchmark/benchmark.h>

#include "hotmv/ot.hpp"
#include "hotmv/regularizers.hpp"

namespace {

using namespace hotmv;

Matrix gaussian(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

// Args: batch size, projection count.
void BM_SlicedWasserstein(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const Index b = state.range(0);
  const Matrix z1 = gaussian(10, b, rng);
  const Matrix z2 = gaussian(10, b, rng);
  const auto proj = sample_projections(state.range(1), 10, 7);
  for (auto _ : state) benchmark::DoNotOptimize(sliced_wasserstein(z1, z2, proj));
}
BENCHMARK(BM_SlicedWasserstein)->ArgsProduct({{100, 400, 1600}, {1, 10}});

void BM_Sinkhorn(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u;
  const Index s = state.range(0);
  Matrix c(s, s);
  for (Index i = 0; i < c.size(); ++i) c.data()[i] = u(rng);
  const Vector p = uniform_marginal(s);
  for (auto _ : state) benchmark::DoNotOptimize(sinkhorn({c, 0.0}, p, p, 0.1, static_cast<int>(state.range(1))));
}
BENCHMARK(BM_Sinkhorn)->ArgsProduct({{6, 32}, {20, 200}});

void BM_HotPairwise(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::vector<Matrix> z;
  for (int s = 0; s < state.range(0); ++s) z.push_back(gaussian(10, 400, rng));
  const auto proj = sample_projections(1, 10, 9);
  for (auto _ : state) benchmark::DoNotOptimize(hot_pairwise_loss(z, proj, 0.01, {0.1, 20}));
}
BENCHMARK(BM_HotPairwise)->Arg(3)->Arg(6);

void BM_HotReference(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::vector<Matrix> z;
  for (int s = 0; s < 6; ++s) z.push_back(gaussian(10, 400, rng));
  const auto refs = make_references(static_cast<size_t>(state.range(0)), 10, 400, rng);
  const auto proj = sample_projections(1, 10, 9);
  for (auto _ : state) benchmark::DoNotOptimize(hot_reference_loss(z, refs, proj, 0.01, {0.1, 20}));
}
BENCHMARK(BM_HotReference)->Arg(1)->Arg(3);

}  // namespace

BENCHMARK_MAIN();
