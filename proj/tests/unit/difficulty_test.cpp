// Copyright 2026 The hashee Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "hashee/difficulty.hpp"
#include "hashee/error.hpp"
#include "hashee/forward.hpp"
#include "hashee/schedule.hpp"
#include "hashee/synthetic.hpp"
#include "oracles.hpp"

namespace hashee {
namespace {

using Bits = std::vector<std::uint8_t>;

DifficultyDataset dataset_of(const std::vector<Bits>& rows) {
  DifficultyDataset ds;
  ds.num_layers = rows.empty() ? 0 : rows.front().size();
  for (std::size_t i = 0; i < rows.size(); ++i)
    ds.instances.push_back({std::to_string(i), {static_cast<TokenId>(i % 3)}, rows[i], {}});
  return ds;
}

// Replays fixed predictions keyed by instance id.
class TablePredictor final : public DifficultyPredictor {
 public:
  explicit TablePredictor(std::map<std::string, Bits> rows) : rows_(std::move(rows)) {}
  std::string name() const override { return "table"; }
  Bits predict(const DifficultyInstance& inst) const override { return rows_.at(inst.id); }

 private:
  std::map<std::string, Bits> rows_;
};

TEST(Evaluate, HandComputedConfusionMatrix) {
  const auto test = dataset_of({{0, 0, 1}, {0, 1, 1}});
  const TablePredictor p({{"0", {0, 0, 0}}, {"1", {1, 1, 1}}});
  const auto m = evaluate(p, test);
  EXPECT_EQ(m, (NegClassMetrics{2, 1, 1, 2}));
  EXPECT_DOUBLE_EQ(m.precision(), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.recall(), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.f1(), 2.0 / 3.0);
  EXPECT_TRUE(m.applicable());
}

TEST(Evaluate, PerfectPredictionsScoreOne) {
  const auto test = dataset_of({{0, 1}, {1, 0}, {1, 1}});
  const TablePredictor p({{"0", {0, 1}}, {"1", {1, 0}}, {"2", {1, 1}}});
  const auto m = evaluate(p, test);
  EXPECT_DOUBLE_EQ(m.precision(), 1.0);
  EXPECT_DOUBLE_EQ(m.recall(), 1.0);
  EXPECT_DOUBLE_EQ(m.f1(), 1.0);
}

TEST(Evaluate, AllPositivePredictionsAreNotApplicable) {
  const auto train = dataset_of({{1, 1}, {1, 1}, {1, 0}});
  const auto majority = MajorityPredictor::fit(train);
  EXPECT_EQ(majority.slots(), (Bits{1, 1}));
  const auto m = evaluate(majority, dataset_of({{0, 1}, {1, 1}}));
  EXPECT_DOUBLE_EQ(m.recall(), 0.0);
  EXPECT_DOUBLE_EQ(m.f1(), 0.0);
  EXPECT_FALSE(m.applicable());
}

TEST(Evaluate, EmptyTestSetIsInputError) {
  const auto majority = MajorityPredictor::fit(dataset_of({{1}}));
  EXPECT_THROW(evaluate(majority, DifficultyDataset{1, {}}), InputError);
}

TEST(Majority, PerSlotMajorityWithPositiveTies) {
  std::vector<Bits> rows(10, Bits{1, 0, 1});
  rows[0] = {0, 0, 0};
  for (int i = 1; i < 5; ++i) rows[i][2] = 0;  // slot 3: 5 negatives of 10
  const auto m = MajorityPredictor::fit(dataset_of(rows));
  EXPECT_EQ(m.slots(), (Bits{1, 0, 1}));
}

TEST(Majority, BeatsEveryConstantPredictorOnTrainingData) {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t slots = 1 + rng.below(4), n = 1 + rng.below(12);
    std::vector<Bits> rows(n, Bits(slots));
    for (auto& r : rows)
      for (auto& b : r) b = rng.below(3) ? 1 : 0;
    const auto train = dataset_of(rows);
    const auto majority = MajorityPredictor::fit(train);
    const auto correct = [&](const Bits& constant) {
      std::size_t c = 0;
      for (const auto& r : rows)
        for (std::size_t s = 0; s < slots; ++s) c += r[s] == constant[s];
      return c;
    };
    const auto best = correct(majority.slots());
    for (std::uint64_t mask = 0; mask < (1u << slots); ++mask) {
      Bits constant(slots);
      for (std::size_t s = 0; s < slots; ++s) constant[s] = (mask >> s) & 1;
      EXPECT_GE(best, correct(constant));
    }
  }
}

TEST(Oversample, SingleNegativeReachesFloor) {
  std::vector<Bits> rows(10, Bits{1});
  rows[3] = {0};
  const auto r = oversample(dataset_of(rows), 5);
  const auto total = r.dataset.size();
  EXPECT_EQ(r.dataset.negatives(0),
            static_cast<std::size_t>(std::ceil(0.3 * static_cast<double>(total))));
  EXPECT_EQ(r.added, 3u);  // (1 + k) / (10 + k) >= 0.3 first holds at k = 3
  for (std::size_t i = 10; i < total; ++i) EXPECT_EQ(r.dataset.instances[i].id, "3");
}

TEST(Oversample, BalancedInputUnchanged) {
  const auto ds = dataset_of({{0, 1}, {1, 0}, {0, 1}, {1, 0}});
  const auto r = oversample(ds, 1);
  EXPECT_EQ(r.added, 0u);
  EXPECT_EQ(r.dataset.size(), ds.size());
  EXPECT_TRUE(r.warnings.empty());
}

TEST(Oversample, AllPositiveSlotWarnsAndIsUntouched) {
  const auto ds = dataset_of({{1, 1}, {1, 0}, {1, 1}});
  const auto r = oversample(ds, 1);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("slot 1"), std::string::npos);
  EXPECT_EQ(r.dataset.negatives(0), 0u);
}

TEST(Oversample, NeverRemovesOrEditsAndIsDeterministic) {
  Rng rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t slots = 1 + rng.below(5), n = 1 + rng.below(30);
    std::vector<Bits> rows(n, Bits(slots));
    for (auto& r : rows)
      for (auto& b : r) b = rng.below(6) ? 1 : 0;
    const auto ds = dataset_of(rows);
    const auto r = oversample(ds, trial);
    ASSERT_GE(r.dataset.size(), ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i)
      EXPECT_EQ(r.dataset.instances[i].bits, ds.instances[i].bits);
    for (std::size_t i = ds.size(); i < r.dataset.size(); ++i) {
      const auto& dup = r.dataset.instances[i];
      EXPECT_EQ(dup.bits, ds.instances.at(std::stoul(dup.id)).bits);
    }
    for (std::size_t s = 0; s < slots; ++s) {
      if (ds.negatives(s) == 0 || r.added == 10 * n) continue;
      EXPECT_GE(static_cast<double>(r.dataset.negatives(s)), 0.3 * r.dataset.size() - 1e-9);
    }
    const auto again = oversample(ds, trial);
    EXPECT_EQ(again.added, r.added);
    for (std::size_t i = 0; i < r.dataset.size(); ++i)
      EXPECT_EQ(again.dataset.instances[i].id, r.dataset.instances[i].id);
  }
}

TEST(Oversample, EmptyDatasetIsInputError) {
  EXPECT_THROW(oversample(DifficultyDataset{2, {}}, 0), InputError);
}

DifficultyDataset with_states(Rng& rng, std::size_t n, std::size_t slots, std::size_t dim) {
  DifficultyDataset ds;
  ds.num_layers = slots;
  for (std::size_t i = 0; i < n; ++i) {
    DifficultyInstance inst;
    inst.id = std::to_string(i);
    inst.states = Matrix(slots, dim);
    for (double& v : inst.states.data()) v = rng.normal();
    for (std::size_t s = 0; s < slots; ++s) inst.bits.push_back(rng.below(2));
    ds.instances.push_back(std::move(inst));
  }
  return ds;
}

TEST(LinearB, GradientMatchesFiniteDifferences) {
  Rng rng(41);
  for (bool shared : {true, false}) {
    for (int trial = 0; trial < 5; ++trial) {
      const std::size_t slots = 1 + rng.below(4), dim = 1 + rng.below(5);
      const auto ds = with_states(rng, 3 + rng.below(6), slots, dim);
      LinearBParams p;
      p.num_layers = slots;
      p.shared = shared;
      p.weight = Matrix(shared ? 1 : slots, dim);
      for (double& w : p.weight.data()) w = rng.normal();
      p.bias.resize(shared ? 1 : slots);
      for (double& b : p.bias) b = rng.normal();
      const auto g = linear_b_gradient(p, ds);
      const auto loss = [&] { return linear_b_loss(p, ds); };
      auto w = p.weight.data();
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double fd = testing::central_difference(&w[i], loss);
        EXPECT_LT(testing::relative_error(g.weight.data()[i], fd), 1e-4);
      }
      for (std::size_t i = 0; i < p.bias.size(); ++i) {
        const double fd = testing::central_difference(&p.bias[i], loss);
        EXPECT_LT(testing::relative_error(g.bias[i], fd), 1e-4);
      }
    }
  }
}

TEST(LinearB, SeparableFeaturesAreLearned) {
  Rng rng(42);
  auto ds = with_states(rng, 80, 3, 4);
  for (auto& inst : ds.instances)
    for (std::size_t s = 0; s < 3; ++s) inst.bits[s] = inst.states(s, 0) + 0.5 * inst.states(s, 2) > 0;
  LinearBOptions opts;
  opts.epochs = 2000;
  opts.lr = 1.0;
  const auto p = LinearBPredictor::fit(ds, opts);
  EXPECT_GE(evaluate(p, ds).f1(), 0.95);
}

TEST(LinearB, ZeroFeaturesCollapseToConstant) {
  DifficultyDataset ds;
  ds.num_layers = 2;
  for (int i = 0; i < 10; ++i)
    ds.instances.push_back({std::to_string(i), {}, {static_cast<std::uint8_t>(i < 8), 1}, Matrix(2, 3)});
  const auto p = LinearBPredictor::fit(ds);
  for (const auto& inst : ds.instances) EXPECT_EQ(p.predict(inst), (Bits{1, 1}));
}

TEST(LinearB, RequiresStates) {
  EXPECT_THROW(LinearBPredictor::fit(dataset_of({{1, 0}})), InputError);
}

TEST(LinearM, PredictsExitLayerFromEmbeddings) {
  // Token 0 is solved at layer 1, token 1 only at layer 3.
  const Matrix emb{{1, 0}, {0, 1}};
  DifficultyDataset ds;
  ds.num_layers = 3;
  for (int i = 0; i < 20; ++i) {
    const bool easy = i % 2 == 0;
    ds.instances.push_back({std::to_string(i), {static_cast<TokenId>(easy ? 0 : 1)},
                            easy ? Bits{1, 1, 1} : Bits{0, 0, 1}, {}});
  }
  LinearBOptions opts;
  opts.epochs = 500;
  const auto p = LinearMPredictor::fit(ds, emb, opts);
  EXPECT_EQ(p.predict_exit(std::vector<TokenId>{0}), 1u);
  EXPECT_EQ(p.predict_exit(std::vector<TokenId>{1}), 3u);
  EXPECT_EQ(p.predict(ds.instances[1]), (Bits{0, 0, 1}));
}

struct AnnotatorFixture {
  SeparableTask task;
  MultiExitAnnotator annotator;
};

AnnotatorFixture small_annotator(std::size_t layers) {
  SeparableTaskConfig tc;
  tc.train_size = 30;
  tc.test_size = 20;
  tc.seed = 8;
  auto task = make_separable_task(tc);
  ModelConfig cfg;
  cfg.num_layers = layers;
  cfg.hidden = 8;
  cfg.heads = 2;
  cfg.ffn_hidden = 8;
  cfg.vocab_size = task.vocab.size();
  auto annotator = train_annotator(EncoderModel::random(cfg, 9), task.train, 2, {50, 0.5});
  return {std::move(task), std::move(annotator)};
}

TEST(Annotate, BitsMatchDirectHeadEvaluation) {
  const auto fx = small_annotator(3);
  const auto ds = annotate(fx.annotator, fx.task.test);
  ASSERT_EQ(ds.size(), fx.task.test.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& ex = fx.task.test[i];
    const auto trace = forward(fx.annotator.model, ex.tokens, uniform_schedule(ex.tokens.size(), 3, 3));
    for (std::size_t l = 1; l <= 3; ++l) {
      const auto pred = argmax(classify_state(fx.annotator.heads[l - 1], trace.hidden[l].row(0)));
      EXPECT_EQ(ds.instances[i].bits[l - 1], pred == ex.label ? 1 : 0);
      const auto state = ds.instances[i].states.row(l - 1), direct = trace.hidden[l].row(0);
      EXPECT_TRUE(std::equal(state.begin(), state.end(), direct.begin()));
    }
  }
}

TEST(Annotate, PerfectOverrideGivesAllOnes) {
  const auto fx = small_annotator(2);
  const auto ds = annotate(fx.annotator, fx.task.test,
                           [](std::size_t, std::size_t gold, std::span<const double>) { return gold; });
  for (const auto& inst : ds.instances) EXPECT_EQ(inst.bits, (Bits{1, 1}));
}

TEST(Annotate, SingleLayerModelGivesOneBit) {
  const auto fx = small_annotator(1);
  const auto ds = annotate(fx.annotator, fx.task.test);
  EXPECT_EQ(ds.num_layers, 1u);
  for (const auto& inst : ds.instances) EXPECT_EQ(inst.bits.size(), 1u);
}

TEST(Annotate, HeadCountMismatchIsConfigError) {
  auto fx = small_annotator(2);
  fx.annotator.heads.pop_back();
  EXPECT_THROW(annotate(fx.annotator, fx.task.test), ConfigError);
}

TEST(Annotate, TokenModeGivesOneInstancePerToken) {
  TokenTaskConfig tc;
  tc.size = 6;
  tc.seq_len = 5;
  const auto task = make_token_task(tc);
  ModelConfig cfg;
  cfg.num_layers = 2;
  cfg.hidden = 4;
  cfg.heads = 1;
  cfg.ffn_hidden = 4;
  cfg.vocab_size = task.vocab.size();
  const auto a = train_token_annotator(EncoderModel::random(cfg, 1), task.sequences, 2, {20, 0.5});
  const auto ds = annotate_tokens(a, task.sequences);
  EXPECT_EQ(ds.size(), 30u);
  EXPECT_EQ(ds.instances[7].id, "1:2");
  EXPECT_EQ(ds.instances[7].tokens, (std::vector<TokenId>{task.sequences[1].tokens[2]}));
}

TEST(DatasetFile, WriteParseRoundTrip) {
  const Vocab vocab({"x", "y", "z"});
  const auto ds = dataset_of({{0, 1, 1}, {1, 1, 0}, {1, 1, 1}});
  std::ostringstream out;
  write_difficulty_dataset(out, ds, vocab);
  EXPECT_EQ(out.str().substr(0, 8), "0\t011\tx\n");
  std::istringstream in(out.str());
  Vocab parsed_vocab = vocab;
  const auto back = parse_difficulty_dataset(in, parsed_vocab);
  ASSERT_EQ(back.size(), ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    EXPECT_EQ(back.instances[i].id, ds.instances[i].id);
    EXPECT_EQ(back.instances[i].bits, ds.instances[i].bits);
    EXPECT_EQ(back.instances[i].tokens, ds.instances[i].tokens);
  }
  EXPECT_EQ(parsed_vocab, vocab);
}

TEST(DatasetFile, RejectsBadBits) {
  Vocab v;
  std::istringstream bad("0\t01x\ta\n");
  EXPECT_THROW(parse_difficulty_dataset(bad, v), ParseError);
  std::istringstream ragged("0\t01\ta\n1\t011\tb\n");
  EXPECT_THROW(parse_difficulty_dataset(ragged, v), ParseError);
}

TEST(MetricsFile, RoundTripAndNotApplicableMarker) {
  const std::vector<NamedMetrics> rows{{"Majority", {0, 0, 4, 8}}, {"Linear-B", {2, 1, 1, 2}}};
  std::ostringstream out;
  write_metrics(out, rows);
  EXPECT_NE(out.str().find("Majority\t-\t-\t-\t0\t0\t4\t8"), std::string::npos);
  EXPECT_NE(out.str().find("Linear-B\t66.7\t66.7\t66.7"), std::string::npos);
  std::istringstream in(out.str());
  EXPECT_EQ(parse_metrics(in), rows);
}

}  // namespace
}  // namespace hashee
