#include <benchmark/benchmark.h>

#include "cotnav/annotator.hpp"
#include "cotnav/demonstrator.hpp"
#include "cotnav/episodes.hpp"
#include "cotnav/policy.hpp"
#include "cotnav/random.hpp"
#include "cotnav/scene.hpp"
#include "cotnav/simulator.hpp"

using namespace cotnav;

namespace {

Scene bench_scene(int size) {
  auto s = generate_scene(42, size, size, 4);
  s.id = "bench";
  return s;
}

void BM_GenerateScene(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(generate_scene(seed++, size, size, 4));
}
BENCHMARK(BM_GenerateScene)->Arg(16)->Arg(32);

void BM_Geodesic(benchmark::State& state) {
  const auto scene = bench_scene(static_cast<int>(state.range(0)));
  const auto floors = scene.floor_cells();
  const auto target = scene.categories_present().front();
  std::size_t i = 0;
  for (auto _ : state) {
    try {
      benchmark::DoNotOptimize(geodesic_distance(scene, floors[i++ % floors.size()], target));
    } catch (const std::exception&) {
    }
  }
}
BENCHMARK(BM_Geodesic)->Arg(16)->Arg(32);

void BM_Observe(benchmark::State& state) {
  const auto scene = bench_scene(16);
  const auto ep = sample_episodes(scene, scene.categories_present(), 1, 1).front();
  auto s = reset(scene, ep);
  for (auto _ : state) {
    s.pose.heading = (s.pose.heading + 1) % kNumHeadings;
    benchmark::DoNotOptimize(observe(scene, s));
  }
}
BENCHMARK(BM_Observe);

void BM_ScriptedDemo(benchmark::State& state) {
  const auto scene = bench_scene(16);
  const auto eps = sample_episodes(scene, scene.categories_present(), 16, 2);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(scripted_demo(scene, eps[i++ % eps.size()], 0));
}
BENCHMARK(BM_ScriptedDemo);

void BM_TrainEpoch(benchmark::State& state) {
  Rng rng(3);
  std::vector<TrainingExample> data(static_cast<std::size_t>(state.range(0)));
  for (auto& ex : data) {
    ex.features.resize(FeatureSpec{FeatureSet::hcot}.dim());
    for (auto& f : ex.features) f = rng.bernoulli(0.2) ? rng.uniform() : 0.0;
    ex.label = static_cast<int>(rng.index(kNumActions));
    ex.confidence = rng.uniform();
  }
  TrainConfig config;
  config.epochs = 1;
  config.loss = LossMode::adaptive;
  for (auto _ : state) benchmark::DoNotOptimize(train(data, config));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TrainEpoch)->Arg(1000)->Arg(4000);

}  // namespace

BENCHMARK_MAIN();
