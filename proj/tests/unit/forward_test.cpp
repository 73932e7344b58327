// Copyright 2026 The hashee Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <sstream>

#include "hashee/corpus.hpp"
#include "hashee/error.hpp"
#include "hashee/forward.hpp"
#include "hashee/schedule.hpp"
#include "oracles.hpp"

namespace hashee {
namespace {

ExitSchedule random_schedule(Rng& rng, std::size_t n, std::size_t L, bool with_padding) {
  ExitSchedule s;
  s.num_layers = L;
  s.exit_layer.resize(n);
  s.valid.assign(n, true);
  for (std::size_t p = 0; p < n; ++p) s.exit_layer[p] = 1 + rng.below(L);
  if (with_padding && n > 1) {
    for (std::size_t p = 1; p < n; ++p) {
      if (rng.below(4) == 0) {
        s.valid[p] = false;
        s.exit_layer[p] = 1;
      }
    }
  }
  return s;
}

TEST(Forward, NoExitMatchesVanilla) {
  Rng rng(100);
  for (int draw = 0; draw < 25; ++draw) {
    const auto cfg = testing::small_config(rng, 12);
    const auto model = EncoderModel::random(cfg, rng.next_u64());
    const auto tokens = testing::random_tokens(rng, 1 + rng.below(10), 12);
    const auto trace = forward(model, tokens, uniform_schedule(tokens.size(), cfg.num_layers,
                                                               cfg.num_layers));
    EXPECT_LE(max_abs_diff(trace.final_states(), vanilla_forward(model, tokens)), 1e-9);
  }
}

TEST(Forward, NoExitMatchesVanillaWithPadding) {
  Rng rng(101);
  for (int draw = 0; draw < 10; ++draw) {
    const auto cfg = testing::small_config(rng, 12);
    const auto model = EncoderModel::random(cfg, rng.next_u64());
    const std::size_t n = 2 + rng.below(8);
    const auto tokens = testing::random_tokens(rng, n, 12);
    auto s = random_schedule(rng, n, cfg.num_layers, true);
    for (std::size_t p = 0; p < n; ++p)
      if (s.valid[p]) s.exit_layer[p] = cfg.num_layers;
    const auto trace = forward(model, tokens, s);
    EXPECT_LE(max_abs_diff(trace.final_states(), vanilla_forward(model, tokens, s.valid)), 1e-9);
  }
}

TEST(Forward, PaddingDoesNotLeakIntoValidRows) {
  Rng rng(102);
  const auto cfg = testing::small_config(rng, 10);
  const auto model = EncoderModel::random(cfg, 7);
  const auto tokens = testing::random_tokens(rng, 6, 10);
  std::vector<TokenId> padded = tokens;
  padded.push_back(3);
  padded.push_back(4);
  ExitSchedule s = uniform_schedule(padded.size(), cfg.num_layers, cfg.num_layers);
  s.valid[6] = s.valid[7] = false;
  s.exit_layer[6] = s.exit_layer[7] = 1;
  const auto with_pad = forward(model, padded, s).final_states();
  const auto plain = vanilla_forward(model, tokens);
  EXPECT_LE(max_abs_diff(gather_rows(with_pad, std::vector<std::size_t>{0, 1, 2, 3, 4, 5}), plain),
            1e-12);
}

TEST(Forward, FreezeIsBitExact) {
  Rng rng(200);
  for (int draw = 0; draw < 25; ++draw) {
    const auto cfg = testing::small_config(rng, 9);
    const auto model = EncoderModel::random(cfg, rng.next_u64());
    const std::size_t n = 1 + rng.below(9);
    const auto tokens = testing::random_tokens(rng, n, 9);
    const auto s = random_schedule(rng, n, cfg.num_layers, draw % 2 == 1);
    const auto trace = forward(model, tokens, s);
    ASSERT_EQ(trace.hidden.size(), cfg.num_layers + 1);
    for (std::size_t p = 0; p < n; ++p) {
      const auto e = s.exit_layer[p];
      for (std::size_t l = e; l <= cfg.num_layers; ++l) {
        const auto a = trace.hidden[l].row(p), b = trace.hidden[e].row(p);
        EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin())) << "p=" << p << " l=" << l;
      }
    }
  }
}

TEST(Forward, AllExitAtFirstLayerFreezesAfterLayerOne) {
  Rng rng(201);
  const auto cfg = testing::small_config(rng, 6);
  const auto model = EncoderModel::random(cfg, 1);
  const auto tokens = testing::random_tokens(rng, 5, 6);
  const auto trace = forward(model, tokens, uniform_schedule(5, cfg.num_layers, 1));
  EXPECT_EQ(trace.final_states(), trace.hidden[1]);
}

TEST(Forward, ActiveSetsShrinkMonotonically) {
  Rng rng(202);
  for (int draw = 0; draw < 10; ++draw) {
    const auto cfg = testing::small_config(rng, 9);
    const auto model = EncoderModel::random(cfg, rng.next_u64());
    const std::size_t n = 1 + rng.below(9);
    const auto s = random_schedule(rng, n, cfg.num_layers, true);
    const auto trace = forward(model, testing::random_tokens(rng, n, 9), s);
    for (std::size_t l = 1; l < trace.remaining.size(); ++l) {
      const auto& prev = trace.remaining[l - 1];
      for (auto p : trace.remaining[l])
        EXPECT_NE(std::find(prev.begin(), prev.end(), p), prev.end());
    }
    for (std::size_t l = 1; l <= cfg.num_layers; ++l) {
      EXPECT_EQ(trace.loads[l - 1].n, s.valid_count());
      EXPECT_EQ(trace.loads[l - 1].m, s.active_count(l));
      EXPECT_EQ(trace.remaining[l - 1], s.active_at(l));
    }
  }
}

TEST(ForwardLayer, EmptyActiveSetIsIdentity) {
  Rng rng(300);
  const auto cfg = testing::small_config(rng, 5);
  const auto model = EncoderModel::random(cfg, 3);
  const auto h = model.embed(testing::random_tokens(rng, 4, 5));
  const auto r = forward_layer(h, {}, std::vector<bool>(4, true), model.layer(0), cfg.heads);
  EXPECT_EQ(r.hidden, h);
}

TEST(ForwardLayer, ExitedRowCopiedAndAttentionNormalized) {
  Rng rng(301);
  ModelConfig cfg;
  cfg.num_layers = 1;
  cfg.hidden = 4;
  cfg.heads = 2;
  cfg.ffn_hidden = 6;
  cfg.vocab_size = 5;
  const auto model = EncoderModel::random(cfg, 4);
  const auto h = model.embed(std::vector<TokenId>{1, 2, 3});
  const std::vector<std::size_t> active{0, 2};
  const auto r = forward_layer(h, active, std::vector<bool>(3, true), model.layer(0), 2, true);
  const auto exited = r.hidden.row(1), before = h.row(1);
  EXPECT_TRUE(std::equal(exited.begin(), exited.end(), before.begin()));
  ASSERT_EQ(r.attention.size(), 2u);
  for (const auto& a : r.attention) {
    ASSERT_EQ(a.rows(), 2u);
    ASSERT_EQ(a.cols(), 3u);
    for (std::size_t q = 0; q < 2; ++q) {
      const auto row = a.row(q);
      EXPECT_NEAR(std::accumulate(row.begin(), row.end(), 0.0), 1.0, 1e-12);
      for (double w : row) EXPECT_GT(w, 0.0);  // the exited key stays visible
    }
  }
}

TEST(ForwardLayer, AttentionSkipsPaddingKeys) {
  Rng rng(302);
  const auto cfg = testing::small_config(rng, 5);
  const auto model = EncoderModel::random(cfg, 5);
  const auto h = model.embed(testing::random_tokens(rng, 5, 5));
  const std::vector<bool> mask{true, true, false, true, false};
  const std::vector<std::size_t> active{0, 1, 3};
  const auto r = forward_layer(h, active, mask, model.layer(0), cfg.heads, true);
  for (const auto& a : r.attention) {
    for (std::size_t q = 0; q < active.size(); ++q) {
      EXPECT_EQ(a(q, 2), 0.0);
      EXPECT_EQ(a(q, 4), 0.0);
      const auto row = a.row(q);
      EXPECT_NEAR(std::accumulate(row.begin(), row.end(), 0.0), 1.0, 1e-12);
    }
  }
}

TEST(ForwardLayer, RejectsMismatchedMask) {
  Rng rng(303);
  const auto cfg = testing::small_config(rng, 5);
  const auto model = EncoderModel::random(cfg, 5);
  const auto h = model.embed(testing::random_tokens(rng, 3, 5));
  const std::vector<std::size_t> active{0};
  EXPECT_THROW(forward_layer(h, active, std::vector<bool>(2, true), model.layer(0), cfg.heads),
               ShapeError);
}

TEST(Forward, BatchOrderIndependence) {
  Rng rng(400);
  const auto cfg = testing::small_config(rng, 8);
  const auto model = EncoderModel::random(cfg, 9);
  std::vector<std::vector<TokenId>> batch;
  std::vector<ExitSchedule> schedules;
  for (int i = 0; i < 6; ++i) {
    batch.push_back(testing::random_tokens(rng, 1 + rng.below(6), 8));
    schedules.push_back(random_schedule(rng, batch.back().size(), cfg.num_layers, false));
  }
  std::vector<Matrix> forward_order, reversed;
  for (std::size_t i = 0; i < batch.size(); ++i)
    forward_order.push_back(forward(model, batch[i], schedules[i]).final_states());
  for (std::size_t i = batch.size(); i-- > 0;)
    reversed.push_back(forward(model, batch[i], schedules[i]).final_states());
  std::reverse(reversed.begin(), reversed.end());
  EXPECT_EQ(forward_order, reversed);
}

TEST(Forward, RejectsEmptyAndOverlongSequences) {
  ModelConfig cfg;
  cfg.num_layers = 1;
  cfg.hidden = 4;
  cfg.heads = 1;
  cfg.ffn_hidden = 4;
  cfg.vocab_size = 3;
  cfg.max_length = 4;
  const auto model = EncoderModel::random(cfg, 0);
  EXPECT_THROW(model.embed({}), InputError);
  EXPECT_THROW(forward(model, std::vector<TokenId>{}, uniform_schedule(0, 1, 1)), InputError);
  EXPECT_THROW(model.embed(std::vector<TokenId>(5, 0)), InputError);
}

TEST(Forward, ScheduleLayerCountMustMatchModel) {
  Rng rng(401);
  auto cfg = testing::small_config(rng, 4);
  cfg.num_layers = 2;
  const auto model = EncoderModel::random(cfg, 0);
  EXPECT_THROW(forward(model, std::vector<TokenId>{1}, uniform_schedule(1, 3, 3)), ConfigError);
}

TEST(Schedule, FrequencyTableLookup) {
  std::string doc;
  for (int i = 0; i < 9; ++i) doc += "a ";
  doc += "b b b c c d e f\n";
  std::istringstream in(doc);
  const auto c = parse_corpus(in, false);
  const auto v = Vocab::from_documents(c.documents);
  const auto t = build_frequency(v, compute_stats(c, v), 3, 6);
  const std::vector<TokenId> seq{v.id("a"), v.id("e")};
  EXPECT_EQ(make_schedule(seq, t, 6).exit_layer, (std::vector<std::size_t>{1, 5}));
}

TEST(Schedule, PinningPaddingAndUnknownTokens) {
  const Vocab v({"x", "y"});
  const HashTable t(HashMethod::kFrequency, 2, 4, 0, v, {0, 1});
  const std::vector<TokenId> seq{0, 0, kUnknownToken, 1};
  ScheduleOptions opts;
  opts.pin_first = true;
  opts.valid = {true, true, true, false};
  const auto s = make_schedule(seq, t, 4, opts);
  EXPECT_EQ(s.exit_layer, (std::vector<std::size_t>{4, 1, 4, 1}));
  EXPECT_EQ(s.active_at(2), (std::vector<std::size_t>{0, 2}));
  EXPECT_THROW(make_schedule(seq, t, 5), ConfigError);
}

TEST(Schedule, AllLastLayerMeansNoExit) {
  const Vocab v({"x", "y"});
  const HashTable t(HashMethod::kFrequency, 1, 1, 0, v, {0, 0});
  const std::vector<TokenId> seq{0, 1, 1};
  const auto s = make_schedule(seq, t, 1);
  EXPECT_EQ(s.active_count(1), 3u);
}

TEST(Classify, ZeroHeadGivesZeroScores) {
  Rng rng(500);
  const auto cfg = testing::small_config(rng, 4, 3);
  const auto model = EncoderModel::random(cfg, 1);
  const auto final = vanilla_forward(model, std::vector<TokenId>{1, 2});
  EXPECT_EQ(classify(model, final), (std::vector<double>{0, 0, 0}));
}

TEST(Classify, HandSetHead) {
  ClassifierHead head{Matrix{{1, -1}, {2, 0}}, {0.5, 0}};
  const std::vector<double> state{1, 1};
  // scores = [1 + 2 + 0.5, -1 + 0] = [3.5, -1]
  EXPECT_EQ(classify_state(head, state), (std::vector<double>{3.5, -1}));
  EXPECT_EQ(argmax(classify_state(head, state)), 0u);
  const ClassifierHead identity{Matrix::identity(2), {0, 0}};
  const std::vector<double> s2{0.25, -3};
  EXPECT_EQ(classify_state(identity, s2), s2);
}

TEST(Classify, MissingHeadIsConfigError) {
  Rng rng(501);
  const auto cfg = testing::small_config(rng, 4, 0);
  const auto model = EncoderModel::random(cfg, 1);
  EXPECT_THROW(classify(model, Matrix(1, cfg.hidden)), ConfigError);
}

TEST(ModelFile, WriteParseRoundTrip) {
  Rng rng(600);
  const auto cfg = testing::small_config(rng, 7, 3);
  auto model = EncoderModel::random(cfg, 11);
  testing::randomize_head(model, rng);
  std::ostringstream out;
  model.write(out);
  EXPECT_EQ(out.str().rfind("#hashee-model v1 ", 0), 0u);
  std::istringstream in(out.str());
  const auto back = EncoderModel::parse(in);
  EXPECT_EQ(back, model);
}

TEST(ModelFile, RejectsTruncatedFile) {
  Rng rng(601);
  const auto model = EncoderModel::random(testing::small_config(rng, 7, 2), 11);
  std::ostringstream out;
  model.write(out);
  const auto text = out.str();
  std::istringstream in(text.substr(0, text.size() / 2));
  EXPECT_THROW(EncoderModel::parse(in), ParseError);
}

}  // namespace
}  // namespace hashee
