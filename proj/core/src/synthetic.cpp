// Copyright 2026 The hashee Authors
// SPDX-License-Identifier: Apache-2.0

#include "hashee/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>

#include "hashee/error.hpp"
#include "hashee/random.hpp"

namespace hashee {
namespace {

Vocab cls_vocab(std::size_t vocab_size) {
  Vocab v;
  v.add(kClsToken);
  for (std::size_t i = 1; i < vocab_size; ++i) v.add(fmt::format("w{}", i));
  return v;
}

}  // namespace

SeparableTask make_separable_task(const SeparableTaskConfig& c) {
  if (c.num_classes < 2) throw ConfigError("separable task needs at least two classes");
  const std::size_t signal_tokens = c.num_classes * c.signal_per_class;
  if (c.vocab_size < 2 + signal_tokens) {
    throw ConfigError(fmt::format("vocab size {} leaves no noise tokens after {} signal tokens",
                                  c.vocab_size, signal_tokens));
  }
  if (c.signal_count == 0 || c.signal_count > c.seq_len) {
    throw ConfigError("signal count must be in 1..seq_len");
  }
  SeparableTask task;
  task.vocab = cls_vocab(c.vocab_size);
  const TokenId first_noise = static_cast<TokenId>(1 + signal_tokens);
  const std::size_t noise_pool = c.vocab_size - first_noise;

  Rng rng(c.seed);
  auto sample = [&]() {
    LabeledSequence ex;
    const std::size_t label = rng.below(c.num_classes);
    std::vector<TokenId> content;
    for (std::size_t i = 0; i < c.signal_count; ++i) {
      content.push_back(static_cast<TokenId>(1 + label * c.signal_per_class +
                                             rng.below(c.signal_per_class)));
    }
    while (content.size() < c.seq_len)
      content.push_back(first_noise + static_cast<TokenId>(rng.below(noise_pool)));
    rng.shuffle(std::span<TokenId>(content));
    ex.tokens.push_back(0);
    ex.tokens.insert(ex.tokens.end(), content.begin(), content.end());
    ex.label = label;
    if (c.label_noise > 0.0 && rng.uniform() < c.label_noise) ex.label = rng.below(c.num_classes);
    return ex;
  };
  for (std::size_t i = 0; i < c.train_size; ++i) task.train.push_back(sample());
  for (std::size_t i = 0; i < c.test_size; ++i) task.test.push_back(sample());
  return task;
}

TokenTask make_token_task(const TokenTaskConfig& c) {
  if (c.num_classes < 2) throw ConfigError("token task needs at least two classes");
  if (c.vocab_size < 2) throw ConfigError("token task needs at least two tokens");
  TokenTask task;
  task.vocab = cls_vocab(c.vocab_size);
  Rng rng(c.seed);
  for (std::size_t s = 0; s < c.size; ++s) {
    TokenLabeledSequence seq;
    for (std::size_t p = 0; p < c.seq_len; ++p) {
      const auto tok = static_cast<TokenId>(1 + rng.below(c.vocab_size - 1));
      std::size_t label = tok % c.num_classes;
      if (c.label_noise > 0.0 && rng.uniform() < c.label_noise) label = rng.below(c.num_classes);
      seq.tokens.push_back(tok);
      seq.labels.push_back(label);
    }
    task.sequences.push_back(std::move(seq));
  }
  return task;
}

Vocab zipf_vocab(std::size_t vocab_size) {
  Vocab v;
  for (std::size_t i = 0; i < vocab_size; ++i) v.add(fmt::format("t{}", i));
  return v;
}

Corpus make_zipf_corpus(std::size_t vocab_size, std::size_t num_docs, std::size_t doc_len,
                        double exponent, std::uint64_t seed) {
  if (vocab_size == 0) throw ConfigError("Zipf corpus needs a non-empty vocabulary");
  std::vector<double> cdf(vocab_size);
  double total = 0.0;
  for (std::size_t r = 0; r < vocab_size; ++r) {
    total += 1.0 / std::pow(static_cast<double>(r + 1), exponent);
    cdf[r] = total;
  }
  const Vocab vocab = zipf_vocab(vocab_size);
  Rng rng(seed);
  Corpus corpus;
  corpus.documents.reserve(num_docs);
  for (std::size_t d = 0; d < num_docs; ++d) {
    Document doc;
    doc.reserve(doc_len);
    for (std::size_t i = 0; i < doc_len; ++i) {
      const double u = rng.uniform() * total;
      auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
      const auto rank = static_cast<std::size_t>(
          std::min<std::ptrdiff_t>(it - cdf.begin(), static_cast<std::ptrdiff_t>(vocab_size - 1)));
      doc.push_back(vocab.token(static_cast<TokenId>(rank)));
    }
    corpus.documents.push_back(std::move(doc));
  }
  return corpus;
}

}  // namespace hashee
