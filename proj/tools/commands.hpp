// Copyright 2026 The hashee Authors
// SPDX-License-Identifier: Apache-2.0

// Command implementations behind the `hashee` executable. Each command takes a
// validated config, writes its artifacts under `out_dir`, logs to `log`, and
// returns what it wrote so tests can compare against direct library calls.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "hashee/difficulty.hpp"
#include "hashee/flops.hpp"
#include "hashee/hash_table.hpp"

namespace hashee::cli {

namespace fs = std::filesystem;

struct GlobalOptions {
  std::uint64_t seed = 0;
  fs::path out_dir = ".";
};

struct BuildHashConfig {
  std::string method;  // random | frequency | mi | clustered
  std::size_t buckets = 0;
  std::size_t layers = 0;
  std::optional<fs::path> corpus;
  bool labeled = false;
  std::optional<fs::path> embeddings;
  bool consistent = true;  // random only
  std::string out = "hash.tsv";
  void validate() const;
};

struct BuildHashResult {
  PhaseTables tables;
  std::vector<fs::path> files;
};

BuildHashResult cmd_build_hash(const GlobalOptions& global, const BuildHashConfig& config,
                               std::ostream& log);

struct FlopsReportConfig {
  fs::path table;
  fs::path corpus;
  std::size_t layers = 0;
  LayerDims dims;
  std::optional<std::size_t> baseline_layers;  // defaults to `layers`
  std::optional<LayerDims> baseline_dims;      // defaults to `dims`
  // Prepended to every document and pinned to the last layer.
  std::optional<std::string> cls_token;
  std::string out = "flops";  // writes <out>.txt and <out>.csv
  void validate() const;
};

struct FlopsReportResult {
  FlopsReport report;
  std::vector<fs::path> files;
};

FlopsReportResult cmd_flops_report(const GlobalOptions& global, const FlopsReportConfig& config,
                                   std::ostream& log);

struct InitModelConfig {
  fs::path table;  // vocabulary source
  std::size_t layers = 0;  // 0: take L from the table
  std::size_t hidden = 32;
  std::size_t heads = 4;
  std::size_t ffn_hidden = 64;
  std::size_t classes = 2;
  std::string out = "model.txt";
  void validate() const;
};

fs::path cmd_init_model(const GlobalOptions& global, const InitModelConfig& config,
                        std::ostream& log);

struct InferConfig {
  fs::path model;
  fs::path table;
  fs::path corpus;
  std::optional<std::string> cls_token;
  std::string out = "predictions.tsv";
  void validate() const;
};

struct InferRow {
  std::size_t prediction = 0;
  std::vector<double> scores;
  std::vector<std::size_t> exit_layers;
};

struct InferResult {
  std::vector<InferRow> rows;
  FlopsReport report;
  fs::path file;
};

InferResult cmd_infer(const GlobalOptions& global, const InferConfig& config, std::ostream& log);

struct AblateConfig {
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::size_t vocab_size = 64;
  std::size_t seq_len = 8;
  std::size_t num_classes = 2;
  std::size_t train_size = 200;
  std::size_t test_size = 200;
  double label_noise = 0.0;
  std::size_t buckets = 4;
  std::size_t layers = 4;
  std::size_t hidden = 16;
  std::size_t heads = 2;
  std::size_t ffn_hidden = 32;
  std::size_t epochs = 200;
  double lr = 0.5;
  bool train_top_ffn = false;
  // Control arm: the "incons" arm reuses the consistent table.
  bool force_identical = false;
  std::string out = "ablation.tsv";
  void validate() const;
};

struct AblationRow {
  std::string arm;   // rand-cons | rand-incons
  std::string seed;  // decimal seed or "mean"
  double accuracy = 0.0;
};

struct AblateResult {
  std::vector<AblationRow> rows;
  double mean_cons = 0.0;
  double mean_incons = 0.0;
  fs::path file;
};

AblateResult cmd_ablate_consistency(const GlobalOptions& global, const AblateConfig& config,
                                    std::ostream& log);

struct DifficultyConfig {
  std::string mode = "sentence";  // sentence | token
  std::size_t vocab_size = 64;
  std::size_t seq_len = 8;
  std::size_t num_classes = 2;
  std::size_t train_size = 200;
  std::size_t test_size = 200;
  double label_noise = 0.2;
  std::size_t layers = 4;
  std::size_t hidden = 16;
  std::size_t heads = 2;
  std::size_t ffn_hidden = 32;
  std::size_t annotator_epochs = 300;
  double annotator_lr = 0.5;
  std::size_t predictor_epochs = 300;
  double predictor_lr = 0.5;
  double floor = 0.3;
  bool per_layer = false;  // Linear-B with one weight vector per layer
  bool perfect_annotator = false;
  std::string prefix = "difficulty";
  void validate() const;
};

struct DifficultyResult {
  DifficultyDataset train;  // after oversampling
  DifficultyDataset test;
  std::vector<NamedMetrics> metrics;
  std::vector<std::string> warnings;
  std::vector<fs::path> files;
};

DifficultyResult cmd_difficulty(const GlobalOptions& global, const DifficultyConfig& config,
                                std::ostream& log);

}  // namespace hashee::cli
