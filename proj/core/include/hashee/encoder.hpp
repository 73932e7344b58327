// Copyright 2026 The hashee Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hashee/matrix.hpp"
#include "hashee/vocab.hpp"

namespace hashee {

struct ModelConfig {
  std::size_t num_layers = 6;
  std::size_t hidden = 64;     // d
  std::size_t heads = 4;       // h; hidden must be divisible by heads
  std::size_t ffn_hidden = 256;  // d_ff
  std::size_t vocab_size = 0;  // V
  std::size_t num_classes = 0;  // 0: no classifier head
  std::size_t max_length = 512;

  std::size_t head_dim() const noexcept { return heads == 0 ? 0 : hidden / heads; }

  // Throws ConfigError on inconsistent dimensions.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Post-norm encoder layer weights. Projections carry no bias.
struct LayerWeights {
  Matrix wq, wk, wv, wo;  // d x d
  Matrix w1;              // d x d_ff
  Matrix w2;              // d_ff x d
  std::vector<double> ln1_gain, ln1_bias;  // after attention
  std::vector<double> ln2_gain, ln2_bias;  // after the FFN

  friend bool operator==(const LayerWeights&, const LayerWeights&) = default;
};

struct ClassifierHead {
  Matrix weight;             // d x num_classes
  std::vector<double> bias;  // num_classes

  friend bool operator==(const ClassifierHead&, const ClassifierHead&) = default;
};

class EncoderModel {
 public:
  EncoderModel() = default;
  // All-zero weights with unit layer-norm gains, shaped by `config`.
  explicit EncoderModel(const ModelConfig& config);

  // Scaled-normal initialization: projections ~ N(0, 1/fan_in), embeddings
  // ~ N(0, 1), head zero.
  static EncoderModel random(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const noexcept { return config_; }
  std::size_t num_layers() const noexcept { return layers_.size(); }

  Matrix& embedding() noexcept { return embedding_; }
  const Matrix& embedding() const noexcept { return embedding_; }
  LayerWeights& layer(std::size_t i) { return layers_.at(i); }
  const LayerWeights& layer(std::size_t i) const { return layers_.at(i); }
  std::span<const LayerWeights> layers() const noexcept { return layers_; }

  bool has_head() const noexcept { return head_.has_value(); }
  const ClassifierHead& head() const;
  ClassifierHead& head();
  void set_head(ClassifierHead head);

  // Token embedding plus fixed sinusoidal position encoding. Unknown ids
  // (>= V) contribute a zero token vector. Throws InputError on an empty
  // sequence or one longer than max_length.
  Matrix embed(std::span<const TokenId> tokens) const;

  // Throws ShapeError when any tensor disagrees with config().
  void validate() const;

  // `#hashee-model v1 L=.. d=.. h=.. d_ff=.. V=..` then named blocks
  // `[tensor <name> <rows> <cols>]`, each followed by rows of reals.
  void write(std::ostream& out) const;
  static EncoderModel parse(std::istream& in, const std::string& source = "<stream>");
  void save(const std::filesystem::path& path) const;
  static EncoderModel load(const std::filesystem::path& path);

  friend bool operator==(const EncoderModel&, const EncoderModel&) = default;

 private:
  ModelConfig config_;
  Matrix embedding_;
  std::vector<LayerWeights> layers_;
  std::optional<ClassifierHead> head_;
};

// Fixed sinusoidal position encoding for `length` positions.
Matrix sinusoidal_positions(std::size_t length, std::size_t hidden);

}  // namespace hashee
