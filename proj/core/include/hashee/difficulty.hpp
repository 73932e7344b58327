// Copyright 2026 The hashee Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hashee/encoder.hpp"
#include "hashee/matrix.hpp"
#include "hashee/synthetic.hpp"
#include "hashee/trainer.hpp"
#include "hashee/vocab.hpp"

namespace hashee {

// Encoder with one internal classifier per layer; head l reads the layer-l
// state of the classification position (or of each token in token mode).
struct MultiExitAnnotator {
  EncoderModel model;
  std::vector<ClassifierHead> heads;

  // Throws ConfigError when the head count differs from the layer count.
  void validate() const;
};

struct AnnotatorOptions {
  std::size_t epochs = 300;
  double lr = 0.5;
};

// Fits every internal head by gradient descent on cross entropy over the
// full-depth (no exit) states of `data`. The encoder stays frozen.
MultiExitAnnotator train_annotator(EncoderModel model, std::span<const LabeledSequence> data,
                                   std::size_t num_classes, const AnnotatorOptions& options = {});
MultiExitAnnotator train_token_annotator(EncoderModel model,
                                         std::span<const TokenLabeledSequence> data,
                                         std::size_t num_classes,
                                         const AnnotatorOptions& options = {});

struct DifficultyInstance {
  std::string id;
  std::vector<TokenId> tokens;
  std::vector<std::uint8_t> bits;  // bits[l-1] == 1 iff internal classifier l is correct
  Matrix states;                   // L x d hidden states feeding each head; may be empty

  bool has_states() const noexcept { return !states.empty(); }
};

struct DifficultyDataset {
  std::size_t num_layers = 0;
  std::vector<DifficultyInstance> instances;

  std::size_t size() const noexcept { return instances.size(); }
  bool empty() const noexcept { return instances.empty(); }
  // Number of instances with a 0 bit in `slot`.
  std::size_t negatives(std::size_t slot) const;
};

// Class predicted by internal classifier `layer` (1-based) from `state`.
using LayerPrediction =
    std::function<std::size_t(std::size_t layer, std::size_t gold, std::span<const double> state)>;

// Sentence-level annotation: one bit vector per sequence. `override`
// replaces the head argmax (used for control experiments).
DifficultyDataset annotate(const MultiExitAnnotator& annotator,
                           std::span<const LabeledSequence> data,
                           const LayerPrediction& override = {});

// Token-level annotation: one bit vector per token position.
DifficultyDataset annotate_tokens(const MultiExitAnnotator& annotator,
                                  std::span<const TokenLabeledSequence> data,
                                  const LayerPrediction& override = {});

struct OversampleOptions {
  double floor = 0.3;
  // Stop after this many duplicates per original instance.
  std::size_t max_growth = 10;
};

struct OversampleResult {
  DifficultyDataset dataset;
  std::size_t added = 0;
  std::vector<std::string> warnings;
};

// Appends seeded duplicates of instances that are negative in an
// under-represented slot until every slot with negatives reaches the
// floor. Never drops instances or edits bits.
OversampleResult oversample(const DifficultyDataset& dataset, std::uint64_t seed,
                            const OversampleOptions& options = {});

class DifficultyPredictor {
 public:
  virtual ~DifficultyPredictor() = default;
  virtual std::string name() const = 0;
  virtual std::vector<std::uint8_t> predict(const DifficultyInstance& instance) const = 0;
};

// Per-slot majority class of the training labels; ties predict positive.
class MajorityPredictor final : public DifficultyPredictor {
 public:
  static MajorityPredictor fit(const DifficultyDataset& train);

  std::string name() const override { return "Majority"; }
  std::vector<std::uint8_t> predict(const DifficultyInstance&) const override { return slots_; }
  const std::vector<std::uint8_t>& slots() const noexcept { return slots_; }

 private:
  std::vector<std::uint8_t> slots_;
};

// Logistic classifier over the layer-l hidden state predicting bit l.
// Weights are shared by every slot unless `shared` is false.
struct LinearBParams {
  std::size_t num_layers = 0;
  bool shared = true;
  Matrix weight;             // (shared ? 1 : L) x d
  std::vector<double> bias;  // (shared ? 1 : L)

  std::span<const double> weight_for(std::size_t slot) const {
    return weight.row(shared ? 0 : slot);
  }
  double bias_for(std::size_t slot) const { return bias[shared ? 0 : slot]; }
};

struct LinearBOptions {
  std::size_t epochs = 300;
  double lr = 0.5;
  std::uint64_t seed = 0;
  bool shared = true;
  double init_scale = 0.01;
};

struct LinearBGradient {
  double loss = 0.0;  // mean binary cross entropy over (instance, slot)
  Matrix weight;
  std::vector<double> bias;
};

double linear_b_loss(const LinearBParams& params, const DifficultyDataset& data);
LinearBGradient linear_b_gradient(const LinearBParams& params, const DifficultyDataset& data);

class LinearBPredictor final : public DifficultyPredictor {
 public:
  explicit LinearBPredictor(LinearBParams params) : params_(std::move(params)) {}
  // Throws InputError without hidden-state features, TrainingError on divergence.
  static LinearBPredictor fit(const DifficultyDataset& train, const LinearBOptions& options = {});

  std::string name() const override { return "Linear-B"; }
  std::vector<std::uint8_t> predict(const DifficultyInstance& instance) const override;
  const LinearBParams& params() const noexcept { return params_; }

 private:
  LinearBParams params_;
};

// Multinomial classifier over mean-pooled token embeddings that predicts
// the exit layer, taken as the first correct layer (L when none is). A
// predicted exit e maps to bits 0 below e and 1 from e upward.
class LinearMPredictor final : public DifficultyPredictor {
 public:
  static LinearMPredictor fit(const DifficultyDataset& train, const Matrix& embedding,
                              const LinearBOptions& options = {});

  std::string name() const override { return "Linear-M"; }
  std::vector<std::uint8_t> predict(const DifficultyInstance& instance) const override;
  std::size_t predict_exit(std::span<const TokenId> tokens) const;

 private:
  std::size_t num_layers_ = 0;
  Matrix embedding_;
  ClassifierHead head_;
};

// Micro-averaged metrics over every (instance, slot) pair with bit 0
// (an incorrect internal prediction) as the detection target.
struct NegClassMetrics {
  std::uint64_t tp = 0;  // predicted 0, gold 0
  std::uint64_t fp = 0;  // predicted 0, gold 1
  std::uint64_t fn = 0;  // predicted 1, gold 0
  std::uint64_t tn = 0;  // predicted 1, gold 1

  double precision() const noexcept;
  double recall() const noexcept;
  double f1() const noexcept;
  // False when the predictor never outputs the negative label, which leaves
  // precision (and so F1) undefined.
  bool applicable() const noexcept { return tp + fp > 0; }

  friend bool operator==(const NegClassMetrics&, const NegClassMetrics&) = default;
};

NegClassMetrics evaluate_predictions(std::span<const std::vector<std::uint8_t>> predicted,
                                     std::span<const std::vector<std::uint8_t>> gold);
// Throws InputError on an empty test set.
NegClassMetrics evaluate(const DifficultyPredictor& predictor, const DifficultyDataset& test);

// `<id>\t<bitstring>\t<space-separated tokens>`, one instance per line.
void write_difficulty_dataset(std::ostream& out, const DifficultyDataset& data,
                              const Vocab& vocab);
// Unknown tokens are added to `vocab`.
DifficultyDataset parse_difficulty_dataset(std::istream& in, Vocab& vocab,
                                           const std::string& source = "<stream>");

struct NamedMetrics {
  std::string model;
  NegClassMetrics metrics;

  friend bool operator==(const NamedMetrics&, const NamedMetrics&) = default;
};

// Tab-separated: model, precision, recall, f1 (percent, "-" when not
// applicable), then the raw tp/fp/fn/tn counts.
void write_metrics(std::ostream& out, std::span<const NamedMetrics> rows);
std::vector<NamedMetrics> parse_metrics(std::istream& in, const std::string& source = "<stream>");

}  // namespace hashee
