// Copyright 2026 The hashee Authors
// SPDX-License-Identifier: Apache-2.0

#include "hashee/difficulty.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/core.h>

#include "hashee/error.hpp"
#include "hashee/forward.hpp"
#include "hashee/random.hpp"
#include "hashee/schedule.hpp"

namespace hashee {
namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

// Softmax regression by full-batch gradient descent from zero weights.
ClassifierHead fit_softmax(const Matrix& x, std::span<const std::size_t> labels,
                           std::size_t classes, std::size_t epochs, double lr) {
  const std::size_t n = x.rows(), d = x.cols();
  ClassifierHead head{Matrix(d, classes), std::vector<double>(classes, 0.0)};
  if (n == 0) return head;
  std::vector<double> p(classes);
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    Matrix gw(d, classes);
    std::vector<double> gb(classes, 0.0);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = x.row(i);
      const auto scores = classify_state(head, row);
      const double hi = *std::max_element(scores.begin(), scores.end());
      double total = 0.0;
      for (std::size_t c = 0; c < classes; ++c) total += (p[c] = std::exp(scores[c] - hi));
      for (double& v : p) v /= total;
      loss -= std::log(std::max(p[labels[i]], 1e-300));
      p[labels[i]] -= 1.0;
      for (std::size_t r = 0; r < d; ++r) {
        auto g = gw.row(r);
        for (std::size_t c = 0; c < classes; ++c) g[c] += row[r] * p[c];
      }
      for (std::size_t c = 0; c < classes; ++c) gb[c] += p[c];
    }
    if (!std::isfinite(loss)) throw TrainingError("softmax regression diverged");
    const double step = lr / static_cast<double>(n);
    auto w = head.weight.data();
    const auto g = gw.data();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= step * g[i];
    for (std::size_t c = 0; c < classes; ++c) head.bias[c] -= step * gb[c];
  }
  return head;
}

// Full-depth forward; returns H^1..H^L.
std::vector<Matrix> layer_states(const EncoderModel& model, std::span<const TokenId> tokens) {
  const std::size_t num_layers = model.num_layers();
  auto trace = forward(model, tokens, uniform_schedule(tokens.size(), num_layers, num_layers));
  trace.hidden.erase(trace.hidden.begin());
  return std::move(trace.hidden);
}

MultiExitAnnotator fit_heads(EncoderModel model, const std::vector<Matrix>& features_per_layer,
                             std::span<const std::size_t> labels, std::size_t num_classes,
                             const AnnotatorOptions& options) {
  if (num_classes < 2) throw ConfigError("annotator needs at least two classes");
  for (auto y : labels)
    if (y >= num_classes) throw InputError(fmt::format("label {} outside {} classes", y, num_classes));
  MultiExitAnnotator annotator;
  for (const auto& features : features_per_layer)
    annotator.heads.push_back(fit_softmax(features, labels, num_classes, options.epochs, options.lr));
  annotator.model = std::move(model);
  return annotator;
}

std::size_t head_prediction(const MultiExitAnnotator& a, std::size_t layer, std::size_t gold,
                            std::span<const double> state, const LayerPrediction& override) {
  if (override) return override(layer, gold, state);
  return argmax(classify_state(a.heads[layer - 1], state));
}

}  // namespace

void MultiExitAnnotator::validate() const {
  if (heads.size() != model.num_layers()) {
    throw ConfigError(fmt::format("annotator has {} heads for {} layers", heads.size(),
                                  model.num_layers()));
  }
}

MultiExitAnnotator train_annotator(EncoderModel model, std::span<const LabeledSequence> data,
                                   std::size_t num_classes, const AnnotatorOptions& options) {
  if (data.empty()) throw InputError("annotator training set is empty");
  const std::size_t num_layers = model.num_layers(), d = model.config().hidden;
  std::vector<Matrix> features(num_layers, Matrix(data.size(), d));
  std::vector<std::size_t> labels;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto states = layer_states(model, data[i].tokens);
    for (std::size_t l = 0; l < num_layers; ++l)
      std::copy_n(states[l].row(0).begin(), d, features[l].row(i).begin());
    labels.push_back(data[i].label);
  }
  return fit_heads(std::move(model), features, labels, num_classes, options);
}

MultiExitAnnotator train_token_annotator(EncoderModel model,
                                         std::span<const TokenLabeledSequence> data,
                                         std::size_t num_classes,
                                         const AnnotatorOptions& options) {
  std::size_t total = 0;
  for (const auto& s : data) {
    if (s.labels.size() != s.tokens.size()) throw InputError("token labels do not align with tokens");
    total += s.tokens.size();
  }
  if (total == 0) throw InputError("annotator training set is empty");
  const std::size_t num_layers = model.num_layers(), d = model.config().hidden;
  std::vector<Matrix> features(num_layers, Matrix(total, d));
  std::vector<std::size_t> labels;
  std::size_t row = 0;
  for (const auto& s : data) {
    if (s.tokens.empty()) continue;
    const auto states = layer_states(model, s.tokens);
    for (std::size_t p = 0; p < s.tokens.size(); ++p, ++row) {
      for (std::size_t l = 0; l < num_layers; ++l)
        std::copy_n(states[l].row(p).begin(), d, features[l].row(row).begin());
      labels.push_back(s.labels[p]);
    }
  }
  return fit_heads(std::move(model), features, labels, num_classes, options);
}

std::size_t DifficultyDataset::negatives(std::size_t slot) const {
  std::size_t n = 0;
  for (const auto& inst : instances)
    if (inst.bits.at(slot) == 0) ++n;
  return n;
}

DifficultyDataset annotate(const MultiExitAnnotator& annotator,
                           std::span<const LabeledSequence> data,
                           const LayerPrediction& override) {
  annotator.validate();
  const std::size_t num_layers = annotator.model.num_layers(), d = annotator.model.config().hidden;
  DifficultyDataset out;
  out.num_layers = num_layers;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto states = layer_states(annotator.model, data[i].tokens);
    DifficultyInstance inst;
    inst.id = std::to_string(i);
    inst.tokens = data[i].tokens;
    inst.states = Matrix(num_layers, d);
    for (std::size_t l = 1; l <= num_layers; ++l) {
      const auto state = states[l - 1].row(0);
      std::copy_n(state.begin(), d, inst.states.row(l - 1).begin());
      const auto pred = head_prediction(annotator, l, data[i].label, state, override);
      inst.bits.push_back(pred == data[i].label ? 1 : 0);
    }
    out.instances.push_back(std::move(inst));
  }
  return out;
}

DifficultyDataset annotate_tokens(const MultiExitAnnotator& annotator,
                                  std::span<const TokenLabeledSequence> data,
                                  const LayerPrediction& override) {
  annotator.validate();
  const std::size_t num_layers = annotator.model.num_layers(), d = annotator.model.config().hidden;
  DifficultyDataset out;
  out.num_layers = num_layers;
  for (std::size_t s = 0; s < data.size(); ++s) {
    if (data[s].labels.size() != data[s].tokens.size()) {
      throw InputError("token labels do not align with tokens");
    }
    if (data[s].tokens.empty()) continue;
    const auto states = layer_states(annotator.model, data[s].tokens);
    for (std::size_t p = 0; p < data[s].tokens.size(); ++p) {
      DifficultyInstance inst;
      inst.id = fmt::format("{}:{}", s, p);
      inst.tokens = {data[s].tokens[p]};
      inst.states = Matrix(num_layers, d);
      for (std::size_t l = 1; l <= num_layers; ++l) {
        const auto state = states[l - 1].row(p);
        std::copy_n(state.begin(), d, inst.states.row(l - 1).begin());
        const auto pred = head_prediction(annotator, l, data[s].labels[p], state, override);
        inst.bits.push_back(pred == data[s].labels[p] ? 1 : 0);
      }
      out.instances.push_back(std::move(inst));
    }
  }
  return out;
}

OversampleResult oversample(const DifficultyDataset& dataset, std::uint64_t seed,
                            const OversampleOptions& options) {
  if (dataset.empty()) throw InputError("cannot oversample an empty dataset");
  const std::size_t slots = dataset.num_layers;
  OversampleResult result;
  result.dataset = dataset;

  std::vector<std::vector<std::size_t>> pools(slots);
  std::vector<std::size_t> neg(slots, 0);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& bits = dataset.instances[i].bits;
    if (bits.size() != slots) throw InputError(fmt::format("instance {} has {} bits, expected {}",
                                                           dataset.instances[i].id, bits.size(), slots));
    for (std::size_t s = 0; s < slots; ++s) {
      if (bits[s] == 0) {
        pools[s].push_back(i);
        ++neg[s];
      }
    }
  }
  for (std::size_t s = 0; s < slots; ++s) {
    if (pools[s].empty()) {
      result.warnings.push_back(fmt::format("slot {} has no negative instances; left untouched", s + 1));
    }
  }

  Rng rng(seed);
  std::size_t total = dataset.size();
  const std::size_t cap = options.max_growth * dataset.size();
  for (;;) {
    std::size_t worst = slots;
    double worst_frac = options.floor;
    for (std::size_t s = 0; s < slots; ++s) {
      if (pools[s].empty()) continue;
      const double frac = static_cast<double>(neg[s]) / static_cast<double>(total);
      if (frac < worst_frac) {
        worst_frac = frac;
        worst = s;
      }
    }
    if (worst == slots) break;
    if (result.added >= cap) {
      result.warnings.push_back(fmt::format(
          "stopped after {} duplicates; slot {} still below the {} floor", result.added, worst + 1,
          options.floor));
      break;
    }
    const std::size_t pick = pools[worst][rng.below(pools[worst].size())];
    const auto& inst = dataset.instances[pick];
    for (std::size_t s = 0; s < slots; ++s)
      if (inst.bits[s] == 0) ++neg[s];
    result.dataset.instances.push_back(inst);
    ++total;
    ++result.added;
  }
  return result;
}

MajorityPredictor MajorityPredictor::fit(const DifficultyDataset& train) {
  if (train.empty()) throw InputError("majority baseline needs training data");
  MajorityPredictor p;
  for (std::size_t s = 0; s < train.num_layers; ++s) {
    const std::size_t negatives = train.negatives(s);
    const std::size_t positives = train.size() - negatives;
    p.slots_.push_back(positives >= negatives ? 1 : 0);
  }
  return p;
}

double linear_b_loss(const LinearBParams& params, const DifficultyDataset& data) {
  return linear_b_gradient(params, data).loss;
}

LinearBGradient linear_b_gradient(const LinearBParams& params, const DifficultyDataset& data) {
  if (data.empty()) throw InputError("Linear-B needs a non-empty dataset");
  const std::size_t d = params.weight.cols();
  LinearBGradient g;
  g.weight = Matrix(params.weight.rows(), d);
  g.bias.assign(params.bias.size(), 0.0);
  const double scale = 1.0 / static_cast<double>(data.size() * params.num_layers);
  for (const auto& inst : data.instances) {
    if (!inst.has_states()) throw InputError("Linear-B needs per-layer hidden-state features");
    for (std::size_t s = 0; s < params.num_layers; ++s) {
      const auto x = inst.states.row(s);
      const auto w = params.weight_for(s);
      double z = params.bias_for(s);
      for (std::size_t j = 0; j < d; ++j) z += w[j] * x[j];
      const double y = inst.bits[s];
      g.loss += scale * (softplus(z) - y * z);
      const double dz = scale * (sigmoid(z) - y);
      const std::size_t row = params.shared ? 0 : s;
      auto gw = g.weight.row(row);
      for (std::size_t j = 0; j < d; ++j) gw[j] += dz * x[j];
      g.bias[row] += dz;
    }
  }
  return g;
}

LinearBPredictor LinearBPredictor::fit(const DifficultyDataset& train,
                                       const LinearBOptions& options) {
  if (train.empty()) throw InputError("Linear-B needs training data");
  if (!train.instances.front().has_states()) {
    throw InputError("Linear-B needs per-layer hidden-state features");
  }
  const std::size_t d = train.instances.front().states.cols();
  const std::size_t rows = options.shared ? 1 : train.num_layers;
  LinearBParams params;
  params.num_layers = train.num_layers;
  params.shared = options.shared;
  params.weight = Matrix(rows, d);
  params.bias.assign(rows, 0.0);
  Rng rng(options.seed);
  for (double& w : params.weight.data()) w = rng.normal(0.0, options.init_scale);

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    const auto g = linear_b_gradient(params, train);
    if (!std::isfinite(g.loss)) {
      throw TrainingError(fmt::format("Linear-B loss became non-finite at epoch {}", epoch));
    }
    auto w = params.weight.data();
    const auto gw = g.weight.data();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= options.lr * gw[i];
    for (std::size_t i = 0; i < params.bias.size(); ++i) params.bias[i] -= options.lr * g.bias[i];
  }
  return LinearBPredictor(std::move(params));
}

std::vector<std::uint8_t> LinearBPredictor::predict(const DifficultyInstance& instance) const {
  if (!instance.has_states()) throw InputError("Linear-B needs per-layer hidden-state features");
  std::vector<std::uint8_t> bits;
  for (std::size_t s = 0; s < params_.num_layers; ++s) {
    const auto x = instance.states.row(s);
    const auto w = params_.weight_for(s);
    double z = params_.bias_for(s);
    for (std::size_t j = 0; j < x.size(); ++j) z += w[j] * x[j];
    bits.push_back(z >= 0.0 ? 1 : 0);
  }
  return bits;
}

namespace {

std::vector<double> mean_pool(const Matrix& embedding, std::span<const TokenId> tokens) {
  std::vector<double> pooled(embedding.cols(), 0.0);
  std::size_t used = 0;
  for (auto t : tokens) {
    if (t >= embedding.rows()) continue;
    const auto row = embedding.row(t);
    for (std::size_t j = 0; j < pooled.size(); ++j) pooled[j] += row[j];
    ++used;
  }
  if (used)
    for (double& v : pooled) v /= static_cast<double>(used);
  return pooled;
}

std::size_t first_correct_layer(std::span<const std::uint8_t> bits) {
  for (std::size_t l = 0; l < bits.size(); ++l)
    if (bits[l]) return l + 1;
  return bits.size();
}

}  // namespace

LinearMPredictor LinearMPredictor::fit(const DifficultyDataset& train, const Matrix& embedding,
                                       const LinearBOptions& options) {
  if (train.empty()) throw InputError("Linear-M needs training data");
  LinearMPredictor p;
  p.num_layers_ = train.num_layers;
  p.embedding_ = embedding;
  Matrix x(train.size(), embedding.cols());
  std::vector<std::size_t> targets;
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto pooled = mean_pool(embedding, train.instances[i].tokens);
    std::copy(pooled.begin(), pooled.end(), x.row(i).begin());
    targets.push_back(first_correct_layer(train.instances[i].bits) - 1);
  }
  p.head_ = fit_softmax(x, targets, train.num_layers, options.epochs, options.lr);
  return p;
}

std::size_t LinearMPredictor::predict_exit(std::span<const TokenId> tokens) const {
  return argmax(classify_state(head_, mean_pool(embedding_, tokens))) + 1;
}

std::vector<std::uint8_t> LinearMPredictor::predict(const DifficultyInstance& instance) const {
  const std::size_t exit = predict_exit(instance.tokens);
  std::vector<std::uint8_t> bits(num_layers_);
  for (std::size_t l = 1; l <= num_layers_; ++l) bits[l - 1] = l >= exit ? 1 : 0;
  return bits;
}

double NegClassMetrics::precision() const noexcept {
  return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
}

double NegClassMetrics::recall() const noexcept {
  return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
}

double NegClassMetrics::f1() const noexcept {
  const double p = precision(), r = recall();
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

NegClassMetrics evaluate_predictions(std::span<const std::vector<std::uint8_t>> predicted,
                                     std::span<const std::vector<std::uint8_t>> gold) {
  if (predicted.size() != gold.size()) throw InputError("prediction and gold counts differ");
  if (gold.empty()) throw InputError("evaluation needs a non-empty test set");
  NegClassMetrics m;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (predicted[i].size() != gold[i].size()) throw InputError("bit-vector lengths differ");
    for (std::size_t s = 0; s < gold[i].size(); ++s) {
      const bool pred_neg = predicted[i][s] == 0, gold_neg = gold[i][s] == 0;
      if (pred_neg && gold_neg) ++m.tp;
      else if (pred_neg) ++m.fp;
      else if (gold_neg) ++m.fn;
      else ++m.tn;
    }
  }
  return m;
}

NegClassMetrics evaluate(const DifficultyPredictor& predictor, const DifficultyDataset& test) {
  if (test.empty()) throw InputError("evaluation needs a non-empty test set");
  std::vector<std::vector<std::uint8_t>> predicted, gold;
  for (const auto& inst : test.instances) {
    predicted.push_back(predictor.predict(inst));
    gold.push_back(inst.bits);
  }
  return evaluate_predictions(predicted, gold);
}

void write_difficulty_dataset(std::ostream& out, const DifficultyDataset& data,
                              const Vocab& vocab) {
  for (const auto& inst : data.instances) {
    out << inst.id << '\t';
    for (auto b : inst.bits) out << (b ? '1' : '0');
    out << '\t';
    for (std::size_t i = 0; i < inst.tokens.size(); ++i) {
      if (i) out << ' ';
      out << (inst.tokens[i] < vocab.size() ? vocab.token(inst.tokens[i]) : std::string("[UNK]"));
    }
    out << '\n';
  }
}

DifficultyDataset parse_difficulty_dataset(std::istream& in, Vocab& vocab,
                                           const std::string& source) {
  DifficultyDataset data;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) throw ParseError(source, lineno, "expected <id>\\t<bits>\\t<tokens>");
    DifficultyInstance inst;
    inst.id = line.substr(0, t1);
    for (char c : line.substr(t1 + 1, t2 - t1 - 1)) {
      if (c != '0' && c != '1') throw ParseError(source, lineno, "bitstring must contain only 0 and 1");
      inst.bits.push_back(c == '1' ? 1 : 0);
    }
    if (inst.bits.empty()) throw ParseError(source, lineno, "empty bitstring");
    if (data.instances.empty()) data.num_layers = inst.bits.size();
    if (inst.bits.size() != data.num_layers) {
      throw ParseError(source, lineno, fmt::format("bitstring has {} bits, expected {}",
                                                   inst.bits.size(), data.num_layers));
    }
    std::istringstream toks(line.substr(t2 + 1));
    std::string tok;
    while (toks >> tok) inst.tokens.push_back(vocab.add(tok));
    data.instances.push_back(std::move(inst));
  }
  return data;
}

void write_metrics(std::ostream& out, std::span<const NamedMetrics> rows) {
  out << "model\tprecision\trecall\tf1\ttp\tfp\tfn\ttn\n";
  for (const auto& row : rows) {
    const auto& m = row.metrics;
    if (m.applicable()) {
      out << fmt::format("{}\t{:.1f}\t{:.1f}\t{:.1f}", row.model, 100.0 * m.precision(),
                         100.0 * m.recall(), 100.0 * m.f1());
    } else {
      out << row.model << "\t-\t-\t-";
    }
    out << fmt::format("\t{}\t{}\t{}\t{}\n", m.tp, m.fp, m.fn, m.tn);
  }
}

std::vector<NamedMetrics> parse_metrics(std::istream& in, const std::string& source) {
  std::vector<NamedMetrics> rows;
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line) || line.rfind("model\t", 0) != 0) {
    throw ParseError(source, 1, "missing metrics header");
  }
  ++lineno;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::istringstream ss(line);
    std::string f;
    while (std::getline(ss, f, '\t')) fields.push_back(f);
    if (fields.size() != 8) throw ParseError(source, lineno, "expected 8 tab-separated fields");
    NamedMetrics row;
    row.model = fields[0];
    try {
      row.metrics.tp = std::stoull(fields[4]);
      row.metrics.fp = std::stoull(fields[5]);
      row.metrics.fn = std::stoull(fields[6]);
      row.metrics.tn = std::stoull(fields[7]);
    } catch (const std::logic_error&) {
      throw ParseError(source, lineno, "malformed count");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace hashee
