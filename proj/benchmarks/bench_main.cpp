// Copyright 2026 The hashee Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "hashee/corpus.hpp"
#include "hashee/forward.hpp"
#include "hashee/hash_table.hpp"
#include "hashee/random.hpp"
#include "hashee/schedule.hpp"
#include "hashee/synthetic.hpp"

namespace {

using namespace hashee;

ModelConfig bench_config() {
  ModelConfig c;
  c.num_layers = 6;
  c.hidden = 64;
  c.heads = 4;
  c.ffn_hidden = 256;
  c.vocab_size = 1000;
  return c;
}

std::vector<TokenId> bench_tokens(std::size_t n) {
  Rng rng(3);
  std::vector<TokenId> t(n);
  for (auto& id : t) id = static_cast<TokenId>(rng.below(1000));
  return t;
}

// Arg: exit layer shared by every token; 6 means no early exit.
void BM_Forward(benchmark::State& state) {
  const auto model = EncoderModel::random(bench_config(), 1);
  const auto tokens = bench_tokens(128);
  const auto schedule = uniform_schedule(tokens.size(), 6, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(forward(model, tokens, schedule));
}
BENCHMARK(BM_Forward)->Arg(1)->Arg(3)->Arg(6)->Unit(benchmark::kMillisecond);

void BM_ForwardFrequencyTable(benchmark::State& state) {
  const auto model = EncoderModel::random(bench_config(), 1);
  const auto corpus = make_zipf_corpus(1000, 2000, 20, 1.0, 2);
  const auto vocab = zipf_vocab(1000);
  const auto table = build_frequency(vocab, compute_stats(corpus, vocab), 6, 6);
  const auto tokens = bench_tokens(128);
  const auto schedule = make_schedule(tokens, table, 6);
  for (auto _ : state) benchmark::DoNotOptimize(forward(model, tokens, schedule));
}
BENCHMARK(BM_ForwardFrequencyTable)->Unit(benchmark::kMillisecond);

void BM_VanillaForward(benchmark::State& state) {
  const auto model = EncoderModel::random(bench_config(), 1);
  const auto tokens = bench_tokens(128);
  for (auto _ : state) benchmark::DoNotOptimize(vanilla_forward(model, tokens));
}
BENCHMARK(BM_VanillaForward)->Unit(benchmark::kMillisecond);

void BM_BuildFrequency(benchmark::State& state) {
  const auto V = static_cast<std::size_t>(state.range(0));
  const auto corpus = make_zipf_corpus(V, 5000, 20, 1.0, 4);
  const auto vocab = Vocab::from_documents(corpus.documents);
  for (auto _ : state) {
    const auto stats = compute_stats(corpus, vocab);
    benchmark::DoNotOptimize(build_frequency(vocab, stats, 6, 6));
  }
}
BENCHMARK(BM_BuildFrequency)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_BuildRandom(benchmark::State& state) {
  const auto vocab = zipf_vocab(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(build_random(vocab, 6, 6, 5, false));
}
BENCHMARK(BM_BuildRandom)->Arg(1000)->Arg(10000)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
