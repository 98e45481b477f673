#include <benchmark/benchmark.h>

#include <filesystem>
#include <random>

#include "segpoison/attack.hpp"
#include "segpoison/dataset_io.hpp"
#include "segpoison/metrics.hpp"
#include "segpoison/synthdata.hpp"
#include "segpoison/toymodel.hpp"

namespace {

using namespace segpoison;

std::pair<Image, LabelMask> scene(int side) {
  synth::SceneSpec spec;
  spec.width = spec.height = side;
  return synth::generate_scene(spec, 0);
}

void BM_BlendLineTrigger(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const auto [img, mask] = scene(side);
  const TriggerSpec t = make_line_trigger(8, {0, 0, 0}, 0, side, side, 0.5f);
  for (auto _ : state) benchmark::DoNotOptimize(blend_trigger(img, t));
  state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_BlendLineTrigger)->Arg(64)->Arg(512);

void BM_TargetTransform(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const auto [img, mask] = scene(side);
  const AttackMatrix a = make_all_to_one_matrix(8, 1);
  for (auto _ : state) benchmark::DoNotOptimize(apply_target_transform(mask, a));
  state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_TargetTransform)->Arg(64)->Arg(512);

void BM_ConfusionAccumulate(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const auto [img, mask] = scene(side);
  const LabelMask pred = apply_target_transform(mask, make_attack_matrix(8, {{3, 5}}));
  ConfusionMatrix cm(8);
  for (auto _ : state) cm.accumulate(pred, mask);
  benchmark::DoNotOptimize(cm.total());
  state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_ConfusionAccumulate)->Arg(64)->Arg(512);

void BM_LossAndGradient(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  PatchModel m(8, FeatureLayout{});
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (auto& w : m.weights) w = u(rng);
  std::vector<double> x(static_cast<std::size_t>(batch) * m.features());
  for (auto& v : x) v = u(rng) + 0.5;
  std::vector<std::uint8_t> y(batch);
  for (int i = 0; i < batch; ++i) y[i] = static_cast<std::uint8_t>(i % 8);
  for (auto _ : state) benchmark::DoNotOptimize(loss_and_gradient(m, x, y));
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_LossAndGradient)->Arg(16)->Arg(256);

void BM_Predict(benchmark::State& state) {
  const auto [img, mask] = scene(64);
  PatchModel m(8, FeatureLayout{});
  for (auto _ : state) benchmark::DoNotOptimize(predict(m, img, static_cast<unsigned>(state.range(0))));
}
BENCHMARK(BM_Predict)->Arg(1)->Arg(4);

void BM_PngRoundTrip(benchmark::State& state) {
  const auto [img, mask] = scene(256);
  const auto path = std::filesystem::temp_directory_path() / "segpoison_bench.png";
  for (auto _ : state) {
    write_png(path, img);
    benchmark::DoNotOptimize(read_png_image(path));
  }
  std::filesystem::remove(path);
}
BENCHMARK(BM_PngRoundTrip);

}  // namespace

BENCHMARK_MAIN();
