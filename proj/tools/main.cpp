// Copyright 2026 The hashee Authors
// SPDX-License-Identifier: Apache-2.0

#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "hashee/error.hpp"

namespace {

using namespace hashee::cli;
using hashee::LayerDims;

void add_layer_dims(CLI::App& cmd, hashee::LayerDims& dims, const std::string& prefix) {
  cmd.add_option("--" + prefix + "d", dims.hidden, "Hidden size d")->capture_default_str();
  cmd.add_option("--" + prefix + "heads", dims.heads, "Attention heads h")->capture_default_str();
  cmd.add_option("--" + prefix + "d-ff", dims.ffn_hidden, "FFN inner size d_ff")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hashee: hash-based early exiting toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions global;
  std::string out_dir = ".";
  app.add_option("--seed", global.seed, "Seed for every random choice")->capture_default_str();
  app.add_option("--out-dir", out_dir, "Directory for written artifacts")->capture_default_str();

  BuildHashConfig build;
  auto* build_cmd = app.add_subcommand("build-hash", "Build a token-to-layer hash table");
  build_cmd->add_option("--method", build.method, "random | frequency | mi | clustered")->required();
  build_cmd->add_option("--buckets", build.buckets, "Number of buckets B")->required();
  build_cmd->add_option("--layers", build.layers, "Number of layers L")->required();
  build_cmd->add_option("--corpus", build.corpus, "Corpus file (one document per line)");
  build_cmd->add_flag("--labeled", build.labeled, "Corpus lines are <label>\\t<text>");
  build_cmd->add_option("--embeddings", build.embeddings, "Embedding file for --method clustered");
  build_cmd->add_option("--consistent", build.consistent,
                        "false: separate .train/.infer tables (random only)")
      ->capture_default_str();
  build_cmd->add_option("--out", build.out, "Output file")->capture_default_str();

  FlopsReportConfig flops;
  LayerDims baseline;
  std::size_t baseline_layers = 0;
  std::string flops_cls;
  auto* flops_cmd = app.add_subcommand("flops-report", "Count FLOPs saved by a hash table");
  flops_cmd->add_option("--table", flops.table, "Hash table file")->required();
  flops_cmd->add_option("--corpus", flops.corpus, "Unlabeled corpus")->required();
  flops_cmd->add_option("--layers", flops.layers, "Number of layers L")->required();
  add_layer_dims(*flops_cmd, flops.dims, "");
  auto* bl_opt = flops_cmd->add_option("--baseline-layers", baseline_layers,
                                       "Baseline layers (default: --layers)");
  auto* bd_opt = flops_cmd->add_option("--baseline-d", baseline.hidden, "Baseline d");
  auto* bh_opt = flops_cmd->add_option("--baseline-heads", baseline.heads, "Baseline h");
  auto* bf_opt = flops_cmd->add_option("--baseline-d-ff", baseline.ffn_hidden, "Baseline d_ff");
  auto* fcls_opt = flops_cmd->add_option("--cls-token", flops_cls,
                                         "Prepend this token to every document and pin it");
  flops_cmd->add_option("--out", flops.out, "Output prefix (.txt and .csv)")->capture_default_str();

  InitModelConfig init;
  auto* init_cmd = app.add_subcommand("init-model", "Write a randomly initialized encoder");
  init_cmd->add_option("--table", init.table, "Hash table supplying the vocabulary")->required();
  init_cmd->add_option("--layers", init.layers, "Layers (default: the table's L)");
  init_cmd->add_option("--d", init.hidden, "Hidden size")->capture_default_str();
  init_cmd->add_option("--heads", init.heads, "Attention heads")->capture_default_str();
  init_cmd->add_option("--d-ff", init.ffn_hidden, "FFN inner size")->capture_default_str();
  init_cmd->add_option("--classes", init.classes, "Classifier outputs")->capture_default_str();
  init_cmd->add_option("--out", init.out, "Output file")->capture_default_str();

  InferConfig infer;
  std::string infer_cls;
  auto* infer_cmd = app.add_subcommand("infer", "Classify documents with hash-based exits");
  infer_cmd->add_option("--model", infer.model, "Model file")->required();
  infer_cmd->add_option("--table", infer.table, "Hash table file")->required();
  infer_cmd->add_option("--corpus", infer.corpus, "Unlabeled corpus")->required();
  auto* icls_opt = infer_cmd->add_option("--cls-token", infer_cls,
                                         "Prepend this token to every document and pin it");
  infer_cmd->add_option("--out", infer.out, "Output file")->capture_default_str();

  AblateConfig ablate;
  auto* ablate_cmd =
      app.add_subcommand("ablate-consistency", "Compare consistent and inconsistent random tables");
  ablate_cmd->add_option("--seeds", ablate.seeds, "Comma-separated seeds")->delimiter(',');
  ablate_cmd->add_option("--vocab-size", ablate.vocab_size)->capture_default_str();
  ablate_cmd->add_option("--seq-len", ablate.seq_len)->capture_default_str();
  ablate_cmd->add_option("--classes", ablate.num_classes)->capture_default_str();
  ablate_cmd->add_option("--train-size", ablate.train_size)->capture_default_str();
  ablate_cmd->add_option("--test-size", ablate.test_size)->capture_default_str();
  ablate_cmd->add_option("--label-noise", ablate.label_noise)->capture_default_str();
  ablate_cmd->add_option("--buckets", ablate.buckets)->capture_default_str();
  ablate_cmd->add_option("--layers", ablate.layers)->capture_default_str();
  ablate_cmd->add_option("--d", ablate.hidden)->capture_default_str();
  ablate_cmd->add_option("--heads", ablate.heads)->capture_default_str();
  ablate_cmd->add_option("--d-ff", ablate.ffn_hidden)->capture_default_str();
  ablate_cmd->add_option("--epochs", ablate.epochs)->capture_default_str();
  ablate_cmd->add_option("--lr", ablate.lr)->capture_default_str();
  ablate_cmd->add_flag("--train-top-ffn", ablate.train_top_ffn, "Also fit the top FFN");
  ablate_cmd->add_flag("--force-identical", ablate.force_identical,
                       "Control: both arms use the consistent table");
  ablate_cmd->add_option("--out", ablate.out)->capture_default_str();

  DifficultyConfig diff;
  auto* diff_cmd = app.add_subcommand("difficulty", "Model-defined difficulty pipeline");
  diff_cmd->add_option("--mode", diff.mode, "sentence | token")->capture_default_str();
  diff_cmd->add_option("--vocab-size", diff.vocab_size)->capture_default_str();
  diff_cmd->add_option("--seq-len", diff.seq_len)->capture_default_str();
  diff_cmd->add_option("--classes", diff.num_classes)->capture_default_str();
  diff_cmd->add_option("--train-size", diff.train_size)->capture_default_str();
  diff_cmd->add_option("--test-size", diff.test_size)->capture_default_str();
  diff_cmd->add_option("--label-noise", diff.label_noise)->capture_default_str();
  diff_cmd->add_option("--layers", diff.layers)->capture_default_str();
  diff_cmd->add_option("--d", diff.hidden)->capture_default_str();
  diff_cmd->add_option("--heads", diff.heads)->capture_default_str();
  diff_cmd->add_option("--d-ff", diff.ffn_hidden)->capture_default_str();
  diff_cmd->add_option("--annotator-epochs", diff.annotator_epochs)->capture_default_str();
  diff_cmd->add_option("--annotator-lr", diff.annotator_lr)->capture_default_str();
  diff_cmd->add_option("--epochs", diff.predictor_epochs)->capture_default_str();
  diff_cmd->add_option("--lr", diff.predictor_lr)->capture_default_str();
  diff_cmd->add_option("--floor", diff.floor, "Oversampling floor per slot")->capture_default_str();
  diff_cmd->add_flag("--per-layer", diff.per_layer, "Linear-B with one weight vector per layer");
  diff_cmd->add_flag("--perfect-annotator", diff.perfect_annotator,
                     "Control: every internal classifier is correct");
  diff_cmd->add_option("--prefix", diff.prefix, "Output file prefix")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  global.out_dir = out_dir;

  try {
    std::ostream& log = std::cout;
    if (*build_cmd) {
      cmd_build_hash(global, build, log);
    } else if (*flops_cmd) {
      if (*bl_opt) flops.baseline_layers = baseline_layers;
      if (*bd_opt || *bh_opt || *bf_opt) {
        LayerDims dims = flops.dims;
        if (*bd_opt) dims.hidden = baseline.hidden;
        if (*bh_opt) dims.heads = baseline.heads;
        if (*bf_opt) dims.ffn_hidden = baseline.ffn_hidden;
        flops.baseline_dims = dims;
      }
      if (*fcls_opt) flops.cls_token = flops_cls;
      cmd_flops_report(global, flops, log);
    } else if (*init_cmd) {
      cmd_init_model(global, init, log);
    } else if (*infer_cmd) {
      if (*icls_opt) infer.cls_token = infer_cls;
      cmd_infer(global, infer, log);
    } else if (*ablate_cmd) {
      cmd_ablate_consistency(global, ablate, log);
    } else if (*diff_cmd) {
      cmd_difficulty(global, diff, log);
    }
  } catch (const hashee::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const hashee::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
