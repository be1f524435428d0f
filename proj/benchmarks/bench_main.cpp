#include <benchmark/benchmark.h>

#include "bfwi/acoustics.hpp"
#include "bfwi/convnet.hpp"
#include "bfwi/datagen.hpp"
#include "bfwi/metrics.hpp"
#include "bfwi/random.hpp"

using namespace bfwi;

namespace {

Field smooth_random(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Field f = normal_field({1, n, n}, rng);
  return gaussian_blur(f, 9);
}

void BM_SimulateShot(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Field v(1, n, n, 2000.0);
  for (std::size_t i = n / 2; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) v(0, i, j) = 3500.0;
  }
  const VelocityField field = make_velocity_field(v, 10.0);
  const AcquisitionGeometry g = make_surface_geometry(n, 1, 15.0, 1e-3, 600);
  for (auto _ : state) benchmark::DoNotOptimize(simulate_shot(field, 0, g));
  state.SetItemsProcessed(state.iterations() * 600);
}
BENCHMARK(BM_SimulateShot)->Arg(64)->Arg(70)->Unit(benchmark::kMillisecond);

void BM_ConvNetForward(benchmark::State& state) {
  ConvNetConfig c;
  c.cond_channels = 3;
  const ConvNet<float> net(c);
  const std::vector<float> in(4 * 64 * 64, 0.1f);
  ConvNetWorkspace<float> ws;
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(in, 64, 64, 500, ws));
}
BENCHMARK(BM_ConvNetForward)->Unit(benchmark::kMillisecond);

void BM_ConvNetTrainStep(benchmark::State& state) {
  ConvNetConfig c;
  c.cond_channels = 3;
  const ConvNet<float> net(c);
  std::vector<TrainExample<float>> batch(static_cast<std::size_t>(state.range(0)));
  for (auto& ex : batch) {
    ex.input.assign(4 * 64 * 64, 0.1f);
    ex.target.assign(64 * 64, 0.2f);
    ex.node = 300;
  }
  std::vector<float> grad;
  for (auto _ : state) benchmark::DoNotOptimize(loss_and_gradient(net, batch, 64, 64, grad));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ConvNetTrainStep)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_Ssim(benchmark::State& state) {
  const Field a = smooth_random(64, 1), b = smooth_random(64, 2);
  for (auto _ : state) benchmark::DoNotOptimize(ssim(a, b));
}
BENCHMARK(BM_Ssim)->Unit(benchmark::kMicrosecond);

void BM_GaussianBlur(benchmark::State& state) {
  const Field a = smooth_random(64, 3);
  for (auto _ : state) benchmark::DoNotOptimize(gaussian_blur(a, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_GaussianBlur)->Arg(8)->Arg(24)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
