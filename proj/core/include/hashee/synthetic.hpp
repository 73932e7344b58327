// Copyright 2026 The hashee Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hashee/corpus.hpp"
#include "hashee/trainer.hpp"
#include "hashee/vocab.hpp"

namespace hashee {

inline constexpr const char* kClsToken = "[CLS]";

// Sequence classification where each class owns a disjoint set of signal
// tokens; every sequence carries `signal_count` tokens of its class among
// uniform noise tokens. Vocabulary: [CLS] (id 0), then w1..w{V-1}.
struct SeparableTaskConfig {
  std::size_t vocab_size = 64;
  std::size_t seq_len = 8;  // content tokens after [CLS]
  std::size_t num_classes = 2;
  std::size_t signal_per_class = 4;
  std::size_t signal_count = 3;
  std::size_t train_size = 200;
  std::size_t test_size = 200;
  double label_noise = 0.0;  // probability of replacing the label uniformly
  std::uint64_t seed = 0;
};

struct SeparableTask {
  Vocab vocab;
  std::vector<LabeledSequence> train;
  std::vector<LabeledSequence> test;
};

SeparableTask make_separable_task(const SeparableTaskConfig& config);

// Per-token labeling task: the gold label of token id t is t mod C, flipped
// uniformly with probability `label_noise`.
struct TokenLabeledSequence {
  std::vector<TokenId> tokens;
  std::vector<std::size_t> labels;  // one per position
};

struct TokenTaskConfig {
  std::size_t vocab_size = 64;
  std::size_t seq_len = 8;
  std::size_t num_classes = 2;
  std::size_t size = 200;
  double label_noise = 0.1;
  std::uint64_t seed = 0;
};

struct TokenTask {
  Vocab vocab;
  std::vector<TokenLabeledSequence> sequences;
};

TokenTask make_token_task(const TokenTaskConfig& config);

// Vocabulary t0..t{V-1}, rank order.
Vocab zipf_vocab(std::size_t vocab_size);

// Documents of `doc_len` tokens drawn i.i.d. with P(rank r) ~ 1/(r+1)^exponent.
Corpus make_zipf_corpus(std::size_t vocab_size, std::size_t num_docs, std::size_t doc_len,
                        double exponent, std::uint64_t seed);

}  // namespace hashee
