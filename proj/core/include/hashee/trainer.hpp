// Copyright 2026 The hashee Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hashee/encoder.hpp"
#include "hashee/hash_table.hpp"
#include "hashee/matrix.hpp"
#include "hashee/vocab.hpp"

namespace hashee {

// Token sequence whose position 0 holds the classification token.
struct LabeledSequence {
  std::vector<TokenId> tokens;
  std::size_t label = 0;
};

struct TrainOptions {
  std::size_t epochs = 200;
  double lr = 0.5;
  std::uint64_t seed = 0;
  // Mini-batch size; 0 trains on the full batch each step.
  std::size_t batch_size = 0;
  // Also fit the last layer's FFN weights (W1, W2) besides the head.
  bool train_top_ffn = false;
  // Pin position 0 to the last layer.
  bool pin_first = true;
};

// Classification-token inputs to the trainable part of the network. When
// the token runs the last layer, `top_input` is its LN1 output there and
// the FFN sublayer is trainable; otherwise `state` is its frozen final state.
struct ToyFeatures {
  bool top_active = false;
  std::vector<double> top_input;
  std::vector<double> state;
};

ToyFeatures extract_features(const EncoderModel& model, std::span<const TokenId> tokens,
                             const HashTable& table, bool pin_first = true);

struct ToyGradient {
  double loss = 0.0;  // mean cross entropy
  Matrix head_weight;
  std::vector<double> head_bias;
  Matrix w1;  // zero unless FFN gradients were requested
  Matrix w2;
};

// Analytic gradient of the mean cross entropy over `features`.
ToyGradient toy_gradient(const EncoderModel& model, std::span<const ToyFeatures> features,
                         std::span<const std::size_t> labels, bool include_ffn);

// Mean cross entropy through the full exit-aware forward pass and head.
double toy_loss(const EncoderModel& model, std::span<const LabeledSequence> data,
                const HashTable& table, bool pin_first = true);

// Gradient-descent fine-tuning of the classifier head (and optionally the
// top FFN) with the `phase` table of `tables`. Returns the trained copy;
// throws TrainingError if the loss stops being finite.
EncoderModel train_toy(EncoderModel model, std::span<const LabeledSequence> data,
                       const PhaseTables& tables, Phase phase, const TrainOptions& options);

std::size_t predict(const EncoderModel& model, std::span<const TokenId> tokens,
                    const HashTable& table, bool pin_first = true);

double accuracy(const EncoderModel& model, std::span<const LabeledSequence> data,
                const HashTable& table, bool pin_first = true);

}  // namespace hashee
