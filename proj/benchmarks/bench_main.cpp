#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "stprep/ibm1.hpp"
#include "stprep/ngram_lm.hpp"
#include "stprep/segmenter.hpp"

namespace {

using namespace stprep;

FrameTrace synthetic_trace(std::size_t frames, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> level(0.0, 1.0);
  std::uniform_int_distribution<int> run(20, 400);
  FrameTrace trace;
  trace.frame_rate_hz = 100.0;
  trace.values.reserve(frames);
  while (trace.values.size() < frames) {
    const double v = level(rng);
    const int len = run(rng);
    for (int i = 0; i < len && trace.values.size() < frames; ++i)
      trace.values.push_back(v);
  }
  return trace;
}

void BM_SegmentAudio(benchmark::State& state) {
  const auto trace =
      synthetic_trace(static_cast<std::size_t>(state.range(0)), 7);
  const SegmenterParams params;
  for (auto _ : state) {
    benchmark::DoNotOptimize(segment_audio(trace, params));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SegmentAudio)->Arg(10'000)->Arg(100'000)->Arg(1'000'000);

std::vector<std::vector<std::string>> synthetic_corpus(std::size_t sentences,
                                                       unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> len(4, 20);
  std::uniform_int_distribution<int> word(0, 499);
  std::vector<std::vector<std::string>> corpus;
  corpus.reserve(sentences);
  for (std::size_t i = 0; i < sentences; ++i) {
    std::vector<std::string> sent;
    const int n = len(rng);
    for (int w = 0; w < n; ++w) sent.push_back("w" + std::to_string(word(rng)));
    corpus.push_back(std::move(sent));
  }
  return corpus;
}

void BM_NGramScore(benchmark::State& state) {
  NGramOptions opts;
  opts.order = static_cast<int>(state.range(0));
  const auto model = NGramModel::train(synthetic_corpus(2000, 11), opts);
  const auto probes = synthetic_corpus(64, 13);
  std::size_t tokens = 0;
  for (const auto& p : probes) tokens += p.size();
  for (auto _ : state) {
    double acc = 0.0;
    for (const auto& probe : probes) acc += model.cross_entropy_bits(probe);
    benchmark::DoNotOptimize(acc);
  }
  state.SetItemsProcessed(state.iterations() * tokens);
}
BENCHMARK(BM_NGramScore)->Arg(2)->Arg(3)->Arg(5);

std::vector<BitextRecord> synthetic_bitext(std::size_t pairs, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> len(3, 12);
  std::uniform_int_distribution<int> word(0, 199);
  std::vector<BitextRecord> out;
  out.reserve(pairs);
  for (std::size_t i = 0; i < pairs; ++i) {
    std::string src, tgt;
    const int n = len(rng);
    for (int w = 0; w < n; ++w) {
      const int v = word(rng);
      if (w) src += ' ', tgt += ' ';
      src += "e" + std::to_string(v);
      tgt += "f" + std::to_string((v + w) % 200);
    }
    out.push_back({std::to_string(i), "en", src, "de", tgt});
  }
  return out;
}

void BM_Model1Iteration(benchmark::State& state) {
  const auto bitext = synthetic_bitext(2000, 17);
  const int threads = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(train_model1(bitext, 1, std::nullopt, nullptr, threads));
  }
  state.SetItemsProcessed(state.iterations() * bitext.size());
}
BENCHMARK(BM_Model1Iteration)->Arg(1)->Arg(2)->Arg(4);

}  // namespace

BENCHMARK_MAIN();
