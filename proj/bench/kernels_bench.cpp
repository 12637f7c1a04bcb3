// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <random>

#include "byol/atlas.hpp"
#include "byol/merge.hpp"
#include "byol/refinery.hpp"

using namespace byol;

namespace {

tensor::TensorCheckpoint checkpoint(std::uint64_t seed, int tensors, std::uint64_t elements) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> nd(0.0f, 1.0f);
  tensor::TensorCheckpoint c;
  for (int i = 0; i < tensors; ++i) {
    tensor::NamedTensor t{{elements}, tensor::DType::f32, {}};
    t.data.resize(elements);
    for (auto& x : t.data) x = nd(rng);
    c.tensors["layer." + std::to_string(i)] = std::move(t);
  }
  return c;
}

struct MergeInputs {
  tensor::TensorCheckpoint pt = checkpoint(1, 64, 16384), it = checkpoint(2, 64, 16384), ex = checkpoint(3, 64, 16384);
};

const MergeInputs& merge_inputs() {
  static const MergeInputs in;
  return in;
}

std::vector<std::string> documents() {
  std::mt19937 rng(4);
  std::vector<std::string> docs;
  for (int i = 0; i < 20000; ++i) {
    std::string d;
    for (int w = 0, n = 20 + static_cast<int>(rng() % 80); w < n; ++w) d += "maw\xC3\xA9 ";
    docs.push_back(std::move(d));
  }
  return docs;
}

std::vector<refinery::SentencePair> pairs() {
  std::mt19937 rng(5);
  std::vector<refinery::SentencePair> out;
  for (int i = 0; i < 50000; ++i) {
    std::string s = "s" + std::to_string(rng() % 40000), t = "t";
    for (int w = 0, n = 2 + static_cast<int>(rng() % 20); w < n; ++w) {
      s += " word";
      t += " mawu";
    }
    out.push_back({s, t});
  }
  return out;
}

void BM_MergeSerial(benchmark::State& st) {
  const auto& in = merge_inputs();
  const auto r = merge::MergeRecipe::from_lambda(0.6);
  for (auto _ : st) benchmark::DoNotOptimize(merge::merge_serial(in.pt, in.it, in.ex, r));
}
void BM_MergeParallel(benchmark::State& st) {
  const auto& in = merge_inputs();
  const auto r = merge::MergeRecipe::from_lambda(0.6);
  for (auto _ : st) benchmark::DoNotOptimize(merge::merge(in.pt, in.it, in.ex, r));
}

void BM_AverageSerial(benchmark::State& st) {
  const auto& in = merge_inputs();
  const std::vector<tensor::TensorCheckpoint> cks{in.pt, in.it, in.ex};
  for (auto _ : st) benchmark::DoNotOptimize(merge::average_checkpoints_serial(cks));
}
void BM_AverageParallel(benchmark::State& st) {
  const auto& in = merge_inputs();
  const std::vector<tensor::TensorCheckpoint> cks{in.pt, in.it, in.ex};
  for (auto _ : st) benchmark::DoNotOptimize(merge::average_checkpoints(cks));
}

void BM_WordCountSerial(benchmark::State& st) {
  const auto docs = documents();
  for (auto _ : st) benchmark::DoNotOptimize(atlas::count_words_serial(docs));
}
void BM_WordCountParallel(benchmark::State& st) {
  const auto docs = documents();
  for (auto _ : st) benchmark::DoNotOptimize(atlas::count_words_parallel(docs));
}

void BM_FilterSerial(benchmark::State& st) {
  const auto ps = pairs();
  for (auto _ : st) benchmark::DoNotOptimize(refinery::filter_pairs_serial(ps));
}
void BM_FilterParallel(benchmark::State& st) {
  const auto ps = pairs();
  for (auto _ : st) benchmark::DoNotOptimize(refinery::filter_pairs(ps));
}

}  // namespace

BENCHMARK(BM_MergeSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MergeParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AverageSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AverageParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_WordCountSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_WordCountParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FilterSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FilterParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
