#include <string>

#include <benchmark/benchmark.h>

#include "hotmv/data.hpp"
#include "hotmv/train.hpp"

namespace {

using namespace hotmv;

// One epoch at the default batch size is a handful of alternating steps;
// this times whole epochs on the default synthetic problem.
void BM_UnsupervisedEpoch(benchmark::State& state) {
  SynthSpec spec;
  spec.samples = 1200;
  auto ds = generate_synthetic(spec);
  standardize(ds);
  ds.aligned = false;
  ds.labels.reset();
  TrainConfig config;
  config.epochs = 1;
  config.regularizer = static_cast<RegularizerKind>(state.range(0));
  state.SetLabel(std::string(regularizer_name(config.regularizer)));
  for (auto _ : state) benchmark::DoNotOptimize(train_unsupervised(ds, config));
}
BENCHMARK(BM_UnsupervisedEpoch)
    ->Arg(static_cast<int>(RegularizerKind::kHotReference))
    ->Arg(static_cast<int>(RegularizerKind::kHotPairwise))
    ->Arg(static_cast<int>(RegularizerKind::kSwReference))
    ->Unit(benchmark::kMillisecond);

void BM_SemisupervisedEpoch(benchmark::State& state) {
  SynthSpec spec;
  auto ds = generate_synthetic(spec);
  standardize(ds);
  const auto split = split_and_unalign(ds, SplitSpec{});
  TrainConfig config;
  config.epochs = 1;
  config.use_autoencoder = state.range(0) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(train_semisupervised(split, config));
}
BENCHMARK(BM_SemisupervisedEpoch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
