#include <random>

#include <benchmark/benchmark.h>

#include "flim/filter_bank.hpp"
#include "flim/image_io.hpp"
#include "flim/kmeans.hpp"
#include "flim/network.hpp"
#include "flim/synthetic.hpp"
#include "flim/tsne.hpp"

namespace {

flim::FilterBank random_bank(int k, int bands, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g(0.0f, 1.0f);
  flim::PatchSets sets(k, bands);
  for (int i = 0; i < 4 * count; ++i) {
    flim::Patch p;
    p.label = 1 + i % 2;
    p.values.resize(sets.dimension());
    for (auto& v : p.values) v = g(rng);
    sets.add(std::move(p));
  }
  return flim::learn_filters(sets, flim::split_filters(count, 2), {.seed = seed});
}

void BM_ConvForward(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const int bands = static_cast<int>(state.range(1));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  flim::Tensor3 rep(size, size, bands);
  for (auto& v : rep.values()) v = u(rng);
  const auto bank = random_bank(7, bands, 32, 2);
  for (auto _ : state) benchmark::DoNotOptimize(flim::conv_forward(rep, bank));
  state.SetItemsProcessed(state.iterations() * size * size);
}
BENCHMARK(BM_ConvForward)->Args({64, 3})->Args({90, 3})->Args({45, 32})->Unit(benchmark::kMillisecond);

void BM_KMeans(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  flim::Matrix<double> pts(n, 147);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < 147; ++j) pts(i, j) = g(rng) + static_cast<double>(i % 4);
  for (auto _ : state) benchmark::DoNotOptimize(flim::kmeans(pts, 8, {.seed = 0}));
}
BENCHMARK(BM_KMeans)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_Tsne(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(4);
  std::normal_distribution<float> g(0.0f, 1.0f);
  flim::Matrix<float> x(n, 50);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < 50; ++j) x(i, j) = g(rng) + static_cast<float>(3 * (i % 3));
  std::vector<std::string> ids(n);
  for (auto _ : state) benchmark::DoNotOptimize(flim::tsne(x, ids, {.perplexity = 20.0, .iterations = 300}));
}
BENCHMARK(BM_Tsne)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_Extraction(benchmark::State& state) {
  const auto ds = flim::make_synthetic({.tiles_per_class = 2, .size = 90, .marked_per_class = 2, .seed = 5});
  std::vector<flim::MarkedImage> marked;
  for (const auto& m : ds.markers)
    for (const auto& t : ds.tiles)
      if (t.id == m.image_id) marked.push_back({flim::lab_image_from_rgb(t.rgb, t.id), m});
  const auto spec = flim::load_network_spec(FLIM_SOURCE_DIR "/configs/coconut-fig2.json");
  const auto model = flim::learn_network(marked, spec, {}, {.seed = 0});
  const auto& image = marked.front().image;
  for (auto _ : state) benchmark::DoNotOptimize(flim::extract_features(image, model));
}
BENCHMARK(BM_Extraction)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
