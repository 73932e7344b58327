// Copyright 2026 The hashee Authors
// SPDX-License-Identifier: Apache-2.0

#include "hashee/forward.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>

#include "hashee/error.hpp"

namespace hashee {
namespace {

std::vector<std::size_t> mask_positions(const std::vector<bool>& mask) {
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < mask.size(); ++p)
    if (mask[p]) out.push_back(p);
  return out;
}

void check_heads(std::size_t d, std::size_t heads) {
  if (heads == 0 || d % heads != 0) {
    throw ShapeError(fmt::format("hidden size {} is not divisible by {} heads", d, heads));
  }
}

}  // namespace

Matrix attention_sublayer(const Matrix& hidden, std::span<const std::size_t> active,
                          const std::vector<bool>& key_mask, const LayerWeights& weights,
                          std::size_t heads, std::vector<Matrix>* attention) {
  const std::size_t n = hidden.rows();
  const std::size_t d = hidden.cols();
  check_heads(d, heads);
  if (key_mask.size() != n) {
    throw ShapeError(fmt::format("key mask length {} for {} rows", key_mask.size(), n));
  }
  if (weights.wq.rows() != d) throw ShapeError("layer weights do not match hidden size");
  const auto keys = mask_positions(key_mask);
  if (keys.empty() && !active.empty()) throw InputError("attention needs at least one key");

  const Matrix h = gather_rows(hidden, active);    // m x d
  const Matrix all = gather_rows(hidden, keys);     // n_valid x d
  const Matrix q = matmul(h, weights.wq);
  const Matrix k = matmul(all, weights.wk);
  const Matrix v = matmul(all, weights.wv);

  const std::size_t dk = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  Matrix concat(active.size(), d);
  if (attention) attention->clear();
  for (std::size_t head = 0; head < heads; ++head) {
    const Matrix qi = slice_cols(q, head * dk, dk);
    const Matrix ki = slice_cols(k, head * dk, dk);
    const Matrix vi = slice_cols(v, head * dk, dk);
    Matrix scores = matmul(qi, transpose(ki));
    for (double& s : scores.data()) s *= scale;
    const Matrix probs = softmax_rows(scores);
    const Matrix xi = matmul(probs, vi);
    for (std::size_t r = 0; r < xi.rows(); ++r)
      std::copy_n(xi.row(r).begin(), dk, concat.row(r).begin() + static_cast<std::ptrdiff_t>(head * dk));
    if (attention) {
      Matrix full(active.size(), n);
      for (std::size_t r = 0; r < probs.rows(); ++r)
        for (std::size_t c = 0; c < keys.size(); ++c) full(r, keys[c]) = probs(r, c);
      attention->push_back(std::move(full));
    }
  }
  const Matrix x = matmul(concat, weights.wo);
  return layer_norm(add(h, x), weights.ln1_gain, weights.ln1_bias);
}

Matrix ffn_sublayer(const Matrix& x, const LayerWeights& weights) {
  const Matrix f = matmul(relu(matmul(x, weights.w1)), weights.w2);
  return layer_norm(add(x, f), weights.ln2_gain, weights.ln2_bias);
}

LayerResult forward_layer(const Matrix& hidden, std::span<const std::size_t> active,
                          const std::vector<bool>& key_mask, const LayerWeights& weights,
                          std::size_t heads, bool record_attention) {
  LayerResult result;
  result.hidden = hidden;
  if (active.empty()) return result;

  std::vector<Matrix> attention;
  const Matrix a = attention_sublayer(hidden, active, key_mask, weights, heads,
                                      record_attention ? &attention : nullptr);
  const Matrix updated = ffn_sublayer(a, weights);
  for (std::size_t r = 0; r < active.size(); ++r)
    std::copy_n(updated.row(r).begin(), hidden.cols(), result.hidden.row(active[r]).begin());
  result.attention = std::move(attention);
  return result;
}

ForwardTrace forward(const EncoderModel& model, std::span<const TokenId> tokens,
                     const ExitSchedule& schedule) {
  const std::size_t num_layers = model.num_layers();
  if (schedule.num_layers != num_layers) {
    throw ConfigError(fmt::format("schedule targets {} layers but the model has {}",
                                  schedule.num_layers, num_layers));
  }
  if (schedule.size() != tokens.size()) {
    throw InputError(fmt::format("schedule covers {} positions, sequence has {}", schedule.size(),
                                 tokens.size()));
  }
  ForwardTrace trace;
  trace.hidden.reserve(num_layers + 1);
  trace.hidden.push_back(model.embed(tokens));
  const std::size_t n_valid = schedule.valid_count();
  for (std::size_t l = 1; l <= num_layers; ++l) {
    auto active = schedule.active_at(l);
    LayerResult out = forward_layer(trace.hidden.back(), active, schedule.valid,
                                    model.layer(l - 1), model.config().heads);
    trace.loads.push_back({n_valid, active.size()});
    trace.remaining.push_back(std::move(active));
    trace.hidden.push_back(std::move(out.hidden));
  }
  return trace;
}

Matrix vanilla_forward(const EncoderModel& model, std::span<const TokenId> tokens,
                       const std::vector<bool>& valid) {
  const auto& cfg = model.config();
  const std::size_t n = tokens.size();
  const std::size_t d = cfg.hidden;
  const std::size_t dk = cfg.head_dim();
  std::vector<bool> mask = valid.empty() ? std::vector<bool>(n, true) : valid;
  if (mask.size() != n) throw InputError("mask length differs from sequence length");

  Matrix h = model.embed(tokens);
  for (const auto& w : model.layers()) {
    const Matrix q = matmul(h, w.wq);
    const Matrix k = matmul(h, w.wk);
    const Matrix v = matmul(h, w.wv);
    Matrix ctx(n, d);
    std::vector<double> weight(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t head = 0; head < cfg.heads; ++head) {
        const std::size_t off = head * dk;
        double hi = -INFINITY;
        for (std::size_t j = 0; j < n; ++j) {
          if (!mask[j]) continue;
          double s = 0.0;
          for (std::size_t c = 0; c < dk; ++c) s += q(i, off + c) * k(j, off + c);
          weight[j] = s / std::sqrt(static_cast<double>(dk));
          hi = std::max(hi, weight[j]);
        }
        double total = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          if (!mask[j]) continue;
          weight[j] = std::exp(weight[j] - hi);
          total += weight[j];
        }
        for (std::size_t j = 0; j < n; ++j) {
          if (!mask[j]) continue;
          for (std::size_t c = 0; c < dk; ++c) ctx(i, off + c) += weight[j] / total * v(j, off + c);
        }
      }
    }
    const Matrix a = layer_norm(add(h, matmul(ctx, w.wo)), w.ln1_gain, w.ln1_bias);
    Matrix inner = matmul(a, w.w1);
    for (double& x : inner.data()) x = x > 0.0 ? x : 0.0;
    const Matrix out = layer_norm(add(a, matmul(inner, w.w2)), w.ln2_gain, w.ln2_bias);
    // Padding rows keep their embedding, matching the exit-aware path.
    for (std::size_t i = 0; i < n; ++i)
      if (mask[i]) std::copy_n(out.row(i).begin(), d, h.row(i).begin());
  }
  return h;
}

std::vector<double> classify_state(const ClassifierHead& head, std::span<const double> state) {
  if (state.size() != head.weight.rows()) {
    throw ShapeError(fmt::format("state of length {} for a head expecting {}", state.size(),
                                 head.weight.rows()));
  }
  std::vector<double> scores(head.bias);
  for (std::size_t i = 0; i < state.size(); ++i) {
    const auto w = head.weight.row(i);
    for (std::size_t c = 0; c < scores.size(); ++c) scores[c] += state[i] * w[c];
  }
  return scores;
}

std::vector<double> classify(const EncoderModel& model, const Matrix& final_states,
                             std::size_t position) {
  if (!model.has_head()) throw ConfigError("model has no classifier head");
  if (position >= final_states.rows()) throw InputError("classification position out of range");
  return classify_state(model.head(), final_states.row(position));
}

std::size_t argmax(std::span<const double> scores) {
  return static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
}

}  // namespace hashee
