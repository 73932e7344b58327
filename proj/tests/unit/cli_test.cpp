// Copyright 2026 The hashee Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "commands.hpp"
#include "hashee/corpus.hpp"
#include "hashee/error.hpp"
#include "hashee/schedule.hpp"

namespace hashee::cli {
namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("hashee_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    std::string doc;
    const std::pair<const char*, int> counts[] = {{"a", 100}, {"b", 50}, {"c", 40},
                                                  {"d", 10},  {"e", 5},  {"f", 1}};
    for (const auto& [tok, n] : counts)
      for (int i = 0; i < n; ++i) doc += std::string(tok) + " ";
    spit(dir_ / "c.txt", doc + "\n");
    global_.out_dir = dir_;
  }
  void TearDown() override { fs::remove_all(dir_); }

  BuildHashConfig frequency_config() const {
    BuildHashConfig c;
    c.method = "frequency";
    c.buckets = 3;
    c.layers = 6;
    c.corpus = dir_ / "c.txt";
    return c;
  }

  fs::path dir_;
  GlobalOptions global_;
  std::ostringstream log_;
};

TEST_F(CliTest, BuildHashFrequencyMatchesLibrary) {
  const auto r = cmd_build_hash(global_, frequency_config(), log_);
  ASSERT_EQ(r.files.size(), 1u);
  const auto corpus = load_corpus(dir_ / "c.txt", false);
  const auto vocab = Vocab::from_documents(corpus.documents);
  const auto direct = build_frequency(vocab, compute_stats(corpus, vocab), 3, 6);
  EXPECT_EQ(slurp(r.files[0]), direct.serialize());
  const auto& t = *r.tables.train;
  EXPECT_EQ(t.layer_of(vocab.id("a")), 1u);
  EXPECT_EQ(t.layer_of(vocab.id("d")), 3u);
  EXPECT_EQ(t.layer_of(vocab.id("f")), 5u);
  EXPECT_NE(log_.str().find("layer   5  tokens 2"), std::string::npos);
}

TEST_F(CliTest, RandomInconsistentWritesTwoFiles) {
  auto c = frequency_config();
  c.method = "random";
  c.consistent = false;
  const auto r = cmd_build_hash(global_, c, log_);
  ASSERT_EQ(r.files.size(), 2u);
  EXPECT_EQ(r.files[0], dir_ / "hash.tsv.train");
  EXPECT_EQ(r.files[1], dir_ / "hash.tsv.infer");
  EXPECT_EQ(HashTable::load(r.files[0]), *r.tables.train);
  EXPECT_EQ(HashTable::load(r.files[1]), *r.tables.infer);
}

TEST_F(CliTest, BuildHashValidationNamesTheFlag) {
  auto c = frequency_config();
  c.buckets = 13;
  c.layers = 12;
  EXPECT_THROW(cmd_build_hash(global_, c, log_), ConfigError);
  c = frequency_config();
  c.method = "mi";
  try {
    cmd_build_hash(global_, c, log_);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("--labeled"), std::string::npos);
  }
  c = frequency_config();
  c.method = "clustered";
  try {
    cmd_build_hash(global_, c, log_);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("--embeddings"), std::string::npos);
  }
  c = frequency_config();
  c.corpus.reset();
  EXPECT_THROW(cmd_build_hash(global_, c, log_), ConfigError);
}

TEST_F(CliTest, BuildHashIsDeterministic) {
  auto c = frequency_config();
  c.method = "random";
  global_.seed = 17;
  const auto first = slurp(cmd_build_hash(global_, c, log_).files[0]);
  const auto second = slurp(cmd_build_hash(global_, c, log_).files[0]);
  EXPECT_EQ(first, second);
}

TEST_F(CliTest, FlopsReportMatchesLibrary) {
  const auto table_path = cmd_build_hash(global_, frequency_config(), log_).files[0];
  spit(dir_ / "docs.txt", "a b c\nf e d a\n\nz a\n");
  FlopsReportConfig c;
  c.table = table_path;
  c.corpus = dir_ / "docs.txt";
  c.layers = 6;
  c.dims = {8, 2, 32};
  const auto r = cmd_flops_report(global_, c, log_);

  const auto table = HashTable::load(table_path);
  const auto corpus = load_corpus(dir_ / "docs.txt", false);
  std::vector<ExitSchedule> schedules;
  for (const auto& doc : corpus.documents)
    schedules.push_back(make_schedule(table.vocab().encode(doc), table, 6));
  const auto direct = flops_report(c.dims, 6, schedules, c.dims, 6);
  EXPECT_EQ(r.report, direct);
  std::ostringstream csv;
  write_report_csv(csv, direct);
  EXPECT_EQ(slurp(dir_ / "flops.csv"), csv.str());
}

TEST_F(CliTest, FlopsReportNoExitIsSpeedupOne) {
  spit(dir_ / "t.tsv", "#hashee v1 method=frequency B=1 L=1 seed=0\na\t0\t1\nb\t0\t1\n");
  FlopsReportConfig c;
  c.table = dir_ / "t.tsv";
  c.corpus = dir_ / "c.txt";
  c.layers = 1;
  EXPECT_DOUBLE_EQ(cmd_flops_report(global_, c, log_).report.speedup(), 1.0);
}

TEST_F(CliTest, FlopsReportErrors) {
  const auto table_path = cmd_build_hash(global_, frequency_config(), log_).files[0];
  FlopsReportConfig c;
  c.table = table_path;
  c.corpus = dir_ / "c.txt";
  c.layers = 5;
  EXPECT_THROW(cmd_flops_report(global_, c, log_), ConfigError);
  spit(dir_ / "empty.txt", "\n\n");
  c.layers = 6;
  c.corpus = dir_ / "empty.txt";
  EXPECT_THROW(cmd_flops_report(global_, c, log_), InputError);
}

TEST_F(CliTest, InitModelAndInfer) {
  const auto table_path = cmd_build_hash(global_, frequency_config(), log_).files[0];
  InitModelConfig init;
  init.table = table_path;
  init.hidden = 8;
  init.heads = 2;
  init.ffn_hidden = 8;
  const auto model_path = cmd_init_model(global_, init, log_);
  spit(dir_ / "docs.txt", "a f\nc\n");
  InferConfig infer;
  infer.model = model_path;
  infer.table = table_path;
  infer.corpus = dir_ / "docs.txt";
  infer.cls_token = "a";
  const auto r = cmd_infer(global_, infer, log_);
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_EQ(r.rows[0].exit_layers, (std::vector<std::size_t>{6, 1, 5}));
  EXPECT_EQ(r.rows[1].exit_layers, (std::vector<std::size_t>{6, 3}));
  EXPECT_NE(slurp(r.file).find("0\t"), std::string::npos);
  infer.cls_token = "[CLS]";
  EXPECT_THROW(cmd_infer(global_, infer, log_), ConfigError);
}

AblateConfig quick_ablation() {
  AblateConfig c;
  c.seeds = {1, 2, 3};
  c.train_size = 40;
  c.test_size = 40;
  c.epochs = 20;
  return c;
}

TEST_F(CliTest, AblationSchemaHasTwoArmsTimesSeedsPlusMean) {
  const auto r = cmd_ablate_consistency(global_, quick_ablation(), log_);
  ASSERT_EQ(r.rows.size(), 2u * (3 + 1));
  EXPECT_EQ(r.rows[3].arm, "rand-cons");
  EXPECT_EQ(r.rows[3].seed, "mean");
  EXPECT_EQ(r.rows[7].arm, "rand-incons");
  EXPECT_EQ(r.rows[7].seed, "mean");
  EXPECT_DOUBLE_EQ(r.rows[3].accuracy, r.mean_cons);
  std::istringstream file(slurp(r.file));
  std::string line;
  std::size_t lines = 0;
  while (std::getline(file, line)) ++lines;
  EXPECT_EQ(lines, 1u + 8u);
}

TEST_F(CliTest, AblationIdenticalTablesGiveIdenticalAccuracy) {
  auto c = quick_ablation();
  c.force_identical = true;
  const auto r = cmd_ablate_consistency(global_, c, log_);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(r.rows[i].accuracy, r.rows[i + 4].accuracy);
}

TEST_F(CliTest, AblationNeedsTwoSeeds) {
  auto c = quick_ablation();
  c.seeds = {1};
  EXPECT_THROW(cmd_ablate_consistency(global_, c, log_), ConfigError);
}

DifficultyConfig quick_difficulty() {
  DifficultyConfig c;
  c.train_size = 40;
  c.test_size = 30;
  c.annotator_epochs = 30;
  c.predictor_epochs = 30;
  return c;
}

TEST_F(CliTest, DifficultyIsByteIdenticalUnderSeed) {
  for (const char* mode : {"sentence", "token"}) {
    auto c = quick_difficulty();
    c.mode = mode;
    global_.seed = 5;
    const auto first = cmd_difficulty(global_, c, log_);
    std::vector<std::string> contents;
    for (const auto& f : first.files) contents.push_back(slurp(f));
    const auto second = cmd_difficulty(global_, c, log_);
    for (std::size_t i = 0; i < second.files.size(); ++i)
      EXPECT_EQ(slurp(second.files[i]), contents[i]) << mode;
  }
}

TEST_F(CliTest, DifficultyMetricsFileRoundTrips) {
  const auto r = cmd_difficulty(global_, quick_difficulty(), log_);
  std::istringstream in(slurp(r.files[2]));
  EXPECT_EQ(parse_metrics(in), r.metrics);
  ASSERT_EQ(r.metrics[0].model, "Majority");
  const auto majority = MajorityPredictor::fit(r.train);
  EXPECT_EQ(r.metrics[0].metrics, evaluate(majority, r.test));
}

TEST_F(CliTest, PerfectAnnotatorControl) {
  auto c = quick_difficulty();
  c.perfect_annotator = true;
  const auto r = cmd_difficulty(global_, c, log_);
  for (const auto& inst : r.train.instances)
    EXPECT_EQ(inst.bits, std::vector<std::uint8_t>(c.layers, 1));
  EXPECT_FALSE(r.metrics[0].metrics.applicable());
  EXPECT_EQ(r.warnings.size(), c.layers);
  EXPECT_NE(slurp(r.files[2]).find("Majority\t-\t-\t-"), std::string::npos);
}

int run(const std::string& args) {
  const int status = std::system((std::string(HASHEE_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST_F(CliTest, ExitStatusReflectsErrors) {
  const std::string out = " --out-dir " + dir_.string();
  const std::string corpus = (dir_ / "c.txt").string();
  EXPECT_EQ(run("build-hash --method frequency --buckets 3 --layers 6 --corpus " + corpus + out), 0);
  EXPECT_NE(run("build-hash --method frequency --buckets 13 --layers 12 --corpus " + corpus + out), 0);
  spit(dir_ / "empty.txt", "");
  EXPECT_NE(run("flops-report --table " + (dir_ / "hash.tsv").string() + " --corpus " +
                (dir_ / "empty.txt").string() + " --layers 6" + out),
            0);
  EXPECT_NE(run("flops-report --table " + (dir_ / "missing.tsv").string() + " --corpus " + corpus +
                " --layers 6" + out),
            0);
  EXPECT_NE(run("no-such-command"), 0);
}

}  // namespace
}  // namespace hashee::cli
