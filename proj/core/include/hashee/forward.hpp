// Copyright 2026 The hashee Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hashee/encoder.hpp"
#include "hashee/matrix.hpp"
#include "hashee/schedule.hpp"

namespace hashee {

// Sequence length and active count seen by one layer.
struct LayerLoad {
  std::size_t n = 0;  // non-padding positions (keys and values)
  std::size_t m = 0;  // positions updated by the layer (queries)

  friend bool operator==(const LayerLoad&, const LayerLoad&) = default;
};

struct LayerResult {
  Matrix hidden;                   // n x d
  std::vector<Matrix> attention;   // per head, m x n (padding columns zero); only when requested
};

// Queries come from the `active` rows only; keys and values from every row
// with key_mask set. Active rows go through attention, output projection,
// residual + layer norm, FFN, residual + layer norm. Every other row is
// copied bit for bit. With no active rows the layer is an exact identity.
LayerResult forward_layer(const Matrix& hidden, std::span<const std::size_t> active,
                          const std::vector<bool>& key_mask, const LayerWeights& weights,
                          std::size_t heads, bool record_attention = false);

// Attention sublayer for the `active` rows: LN1(h + MHA(h, H, H)). Returns
// an m x d matrix.
Matrix attention_sublayer(const Matrix& hidden, std::span<const std::size_t> active,
                          const std::vector<bool>& key_mask, const LayerWeights& weights,
                          std::size_t heads, std::vector<Matrix>* attention = nullptr);

// LN2(x + ReLU(x W1) W2).
Matrix ffn_sublayer(const Matrix& x, const LayerWeights& weights);

struct ForwardTrace {
  std::vector<Matrix> hidden;                  // H^0 .. H^L
  std::vector<std::vector<std::size_t>> remaining;  // remaining[l-1]: rows updated by layer l
  std::vector<LayerLoad> loads;                // per layer, for FLOPs accounting

  const Matrix& final_states() const { return hidden.back(); }
};

// Exit-aware forward pass. Throws InputError for empty sequences and
// ConfigError when the schedule depth differs from the model's.
ForwardTrace forward(const EncoderModel& model, std::span<const TokenId> tokens,
                     const ExitSchedule& schedule);

// Plain post-norm encoder over every valid position, no early exit.
// Written independently of forward_layer; used as the reference route.
Matrix vanilla_forward(const EncoderModel& model, std::span<const TokenId> tokens,
                       const std::vector<bool>& valid = {});

// Head scores for the state at `position` (the classification token).
std::vector<double> classify(const EncoderModel& model, const Matrix& final_states,
                             std::size_t position = 0);
std::vector<double> classify_state(const ClassifierHead& head, std::span<const double> state);

std::size_t argmax(std::span<const double> scores);

}  // namespace hashee
