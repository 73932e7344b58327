// Copyright 2026 The hashee Authors
// SPDX-License-Identifier: Apache-2.0

#include "hashee/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/core.h>

#include "hashee/error.hpp"
#include "hashee/forward.hpp"
#include "hashee/random.hpp"
#include "hashee/schedule.hpp"

namespace hashee {
namespace {

struct TopForward {
  std::vector<double> pre;     // a W1
  std::vector<double> act;     // ReLU(pre)
  std::vector<double> normed;  // (s - mean) * inv_std
  double inv_std = 0.0;
  std::vector<double> out;     // LN2 output
};

TopForward run_top_ffn(const LayerWeights& w, std::span<const double> a) {
  const std::size_t d = a.size();
  const std::size_t f = w.w1.cols();
  TopForward t;
  t.pre.assign(f, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    const auto row = w.w1.row(i);
    for (std::size_t j = 0; j < f; ++j) t.pre[j] += a[i] * row[j];
  }
  t.act.resize(f);
  for (std::size_t j = 0; j < f; ++j) t.act[j] = std::max(t.pre[j], 0.0);
  std::vector<double> s(a.begin(), a.end());
  for (std::size_t j = 0; j < f; ++j) {
    const auto row = w.w2.row(j);
    for (std::size_t i = 0; i < d; ++i) s[i] += t.act[j] * row[i];
  }
  double mean = 0.0;
  for (double v : s) mean += v;
  mean /= static_cast<double>(d);
  double var = 0.0;
  for (double v : s) var += (v - mean) * (v - mean);
  var /= static_cast<double>(d);
  t.inv_std = 1.0 / std::sqrt(var + kLayerNormEps);
  t.normed.resize(d);
  t.out.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    t.normed[i] = (s[i] - mean) * t.inv_std;
    t.out[i] = t.normed[i] * w.ln2_gain[i] + w.ln2_bias[i];
  }
  return t;
}

std::vector<double> softmax(std::span<const double> scores) {
  const double hi = *std::max_element(scores.begin(), scores.end());
  std::vector<double> p(scores.size());
  double total = 0.0;
  for (std::size_t c = 0; c < p.size(); ++c) {
    p[c] = std::exp(scores[c] - hi);
    total += p[c];
  }
  for (double& v : p) v /= total;
  return p;
}

double cross_entropy(std::span<const double> scores, std::size_t label) {
  const double hi = *std::max_element(scores.begin(), scores.end());
  double total = 0.0;
  for (double s : scores) total += std::exp(s - hi);
  return std::log(total) + hi - scores[label];
}

void check_labels(const EncoderModel& model, std::span<const std::size_t> labels) {
  const std::size_t classes = model.head().bias.size();
  for (auto y : labels)
    if (y >= classes) throw InputError(fmt::format("label {} outside {} classes", y, classes));
}

}  // namespace

ToyFeatures extract_features(const EncoderModel& model, std::span<const TokenId> tokens,
                             const HashTable& table, bool pin_first) {
  const std::size_t num_layers = model.num_layers();
  ScheduleOptions opts;
  opts.pin_first = pin_first;
  const ExitSchedule schedule = make_schedule(tokens, table, num_layers, opts);

  Matrix h = model.embed(tokens);
  for (std::size_t l = 1; l < num_layers; ++l) {
    h = forward_layer(h, schedule.active_at(l), schedule.valid, model.layer(l - 1),
                      model.config().heads)
            .hidden;
  }
  ToyFeatures f;
  if (schedule.exit_layer[0] >= num_layers) {
    const std::size_t cls[] = {0};
    const Matrix a = attention_sublayer(h, cls, schedule.valid, model.layer(num_layers - 1),
                                        model.config().heads);
    f.top_active = true;
    f.top_input.assign(a.row(0).begin(), a.row(0).end());
  } else {
    f.state.assign(h.row(0).begin(), h.row(0).end());
  }
  return f;
}

ToyGradient toy_gradient(const EncoderModel& model, std::span<const ToyFeatures> features,
                         std::span<const std::size_t> labels, bool include_ffn) {
  if (features.size() != labels.size()) throw InputError("features and labels differ in length");
  if (features.empty()) throw InputError("gradient over an empty batch");
  check_labels(model, labels);
  const auto& head = model.head();
  const auto& top = model.layer(model.num_layers() - 1);
  const std::size_t d = model.config().hidden;
  const std::size_t f = model.config().ffn_hidden;
  const std::size_t classes = head.bias.size();

  ToyGradient g;
  g.head_weight = Matrix(d, classes);
  g.head_bias.assign(classes, 0.0);
  g.w1 = Matrix(d, f);
  g.w2 = Matrix(f, d);
  const double scale = 1.0 / static_cast<double>(features.size());

  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto& feat = features[i];
    TopForward t;
    std::span<const double> z = feat.state;
    if (feat.top_active) {
      t = run_top_ffn(top, feat.top_input);
      z = t.out;
    }
    const auto scores = classify_state(head, z);
    g.loss += scale * cross_entropy(scores, labels[i]);
    auto dscores = softmax(scores);
    dscores[labels[i]] -= 1.0;
    for (auto& v : dscores) v *= scale;

    std::vector<double> dz(d, 0.0);
    for (std::size_t r = 0; r < d; ++r) {
      const auto wrow = head.weight.row(r);
      auto grow = g.head_weight.row(r);
      for (std::size_t c = 0; c < classes; ++c) {
        grow[c] += z[r] * dscores[c];
        dz[r] += wrow[c] * dscores[c];
      }
    }
    for (std::size_t c = 0; c < classes; ++c) g.head_bias[c] += dscores[c];

    if (!include_ffn || !feat.top_active) continue;
    // Back through LN2: ds = inv_std * (dn - mean(dn) - n * mean(dn * n)).
    std::vector<double> dn(d);
    double mean_dn = 0.0, mean_dn_n = 0.0;
    for (std::size_t r = 0; r < d; ++r) {
      dn[r] = dz[r] * top.ln2_gain[r];
      mean_dn += dn[r];
      mean_dn_n += dn[r] * t.normed[r];
    }
    mean_dn /= static_cast<double>(d);
    mean_dn_n /= static_cast<double>(d);
    std::vector<double> ds(d);
    for (std::size_t r = 0; r < d; ++r)
      ds[r] = t.inv_std * (dn[r] - mean_dn - t.normed[r] * mean_dn_n);

    // s = a + ReLU(a W1) W2; the residual path into `a` is frozen.
    std::vector<double> dpre(f, 0.0);
    for (std::size_t j = 0; j < f; ++j) {
      auto g2 = g.w2.row(j);
      const auto w2row = top.w2.row(j);
      double dact = 0.0;
      for (std::size_t r = 0; r < d; ++r) {
        g2[r] += t.act[j] * ds[r];
        dact += w2row[r] * ds[r];
      }
      dpre[j] = t.pre[j] > 0.0 ? dact : 0.0;
    }
    for (std::size_t r = 0; r < d; ++r) {
      auto g1 = g.w1.row(r);
      for (std::size_t j = 0; j < f; ++j) g1[j] += feat.top_input[r] * dpre[j];
    }
  }
  return g;
}

double toy_loss(const EncoderModel& model, std::span<const LabeledSequence> data,
                const HashTable& table, bool pin_first) {
  if (data.empty()) throw InputError("loss over an empty dataset");
  ScheduleOptions opts;
  opts.pin_first = pin_first;
  double total = 0.0;
  for (const auto& ex : data) {
    const auto schedule = make_schedule(ex.tokens, table, model.num_layers(), opts);
    const auto trace = forward(model, ex.tokens, schedule);
    total += cross_entropy(classify(model, trace.final_states()), ex.label);
  }
  return total / static_cast<double>(data.size());
}

EncoderModel train_toy(EncoderModel model, std::span<const LabeledSequence> data,
                       const PhaseTables& tables, Phase phase, const TrainOptions& options) {
  if (data.empty()) throw InputError("training set is empty");
  if (!model.has_head()) throw ConfigError("train_toy needs a model with a classifier head");
  const HashTable& table = table_for(tables, phase);

  std::vector<ToyFeatures> features;
  std::vector<std::size_t> labels;
  features.reserve(data.size());
  for (const auto& ex : data) {
    features.push_back(extract_features(model, ex.tokens, table, options.pin_first));
    labels.push_back(ex.label);
  }
  check_labels(model, labels);

  const std::size_t batch =
      options.batch_size == 0 ? data.size() : std::min(options.batch_size, data.size());
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(options.seed);

  auto& head = model.head();
  auto& top = model.layer(model.num_layers() - 1);
  std::vector<ToyFeatures> batch_features;
  std::vector<std::size_t> batch_labels;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    if (batch < data.size()) rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < data.size(); start += batch) {
      batch_features.clear();
      batch_labels.clear();
      for (std::size_t i = start; i < std::min(start + batch, data.size()); ++i) {
        batch_features.push_back(features[order[i]]);
        batch_labels.push_back(labels[order[i]]);
      }
      const ToyGradient g = toy_gradient(model, batch_features, batch_labels,
                                         options.train_top_ffn);
      if (!std::isfinite(g.loss)) {
        throw TrainingError(fmt::format("loss became non-finite at epoch {}", epoch));
      }
      auto hw = head.weight.data();
      const auto gw = g.head_weight.data();
      for (std::size_t i = 0; i < hw.size(); ++i) hw[i] -= options.lr * gw[i];
      for (std::size_t c = 0; c < head.bias.size(); ++c) head.bias[c] -= options.lr * g.head_bias[c];
      if (options.train_top_ffn) {
        auto w1 = top.w1.data();
        const auto g1 = g.w1.data();
        for (std::size_t i = 0; i < w1.size(); ++i) w1[i] -= options.lr * g1[i];
        auto w2 = top.w2.data();
        const auto g2 = g.w2.data();
        for (std::size_t i = 0; i < w2.size(); ++i) w2[i] -= options.lr * g2[i];
      }
    }
  }
  if (!head.weight.all_finite() || !top.w1.all_finite() || !top.w2.all_finite()) {
    throw TrainingError("training produced non-finite weights");
  }
  return model;
}

std::size_t predict(const EncoderModel& model, std::span<const TokenId> tokens,
                    const HashTable& table, bool pin_first) {
  ScheduleOptions opts;
  opts.pin_first = pin_first;
  const auto schedule = make_schedule(tokens, table, model.num_layers(), opts);
  const auto trace = forward(model, tokens, schedule);
  return argmax(classify(model, trace.final_states()));
}

double accuracy(const EncoderModel& model, std::span<const LabeledSequence> data,
                const HashTable& table, bool pin_first) {
  if (data.empty()) throw InputError("accuracy over an empty dataset");
  std::size_t correct = 0;
  for (const auto& ex : data)
    if (predict(model, ex.tokens, table, pin_first) == ex.label) ++correct;
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace hashee
