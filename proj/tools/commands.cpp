// Copyright 2026 The hashee Authors
// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <fstream>
#include <numeric>

#include <fmt/core.h>

#include "hashee/corpus.hpp"
#include "hashee/encoder.hpp"
#include "hashee/error.hpp"
#include "hashee/forward.hpp"
#include "hashee/kmeans.hpp"
#include "hashee/random.hpp"
#include "hashee/schedule.hpp"
#include "hashee/synthetic.hpp"
#include "hashee/trainer.hpp"

namespace hashee::cli {
namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

void require_positive(std::size_t value, std::string_view flag) {
  require(value > 0, fmt::format("{} must be positive", flag));
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(fmt::format("cannot write {}", path.string()));
  return out;
}

void check_written(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw InputError(fmt::format("failed writing {}", path.string()));
}

void log_histogram(std::ostream& log, const HashTable& table, std::string_view label) {
  const auto sizes = table.bucket_sizes();
  log << fmt::format("{} ({}, {} tokens)\n", label, to_string(table.method()), table.size());
  for (std::size_t b = 0; b < sizes.size(); ++b) {
    log << fmt::format("  bucket {:>3}  layer {:>3}  tokens {}\n", b,
                       bucket_to_layer(b, table.num_buckets(), table.num_layers()), sizes[b]);
  }
}

// Encodes with the table's vocabulary; optional CLS prefix.
std::vector<TokenId> encode_document(const Vocab& vocab, const Document& doc,
                                     const std::optional<std::string>& cls) {
  std::vector<TokenId> ids;
  ids.reserve(doc.size() + 1);
  if (cls) ids.push_back(vocab.id(*cls));
  for (const auto& tok : doc) ids.push_back(vocab.id(tok));
  return ids;
}

ModelConfig toy_model_config(std::size_t layers, std::size_t hidden, std::size_t heads,
                             std::size_t ffn_hidden, std::size_t vocab, std::size_t classes) {
  ModelConfig mc;
  mc.num_layers = layers;
  mc.hidden = hidden;
  mc.heads = heads;
  mc.ffn_hidden = ffn_hidden;
  mc.vocab_size = vocab;
  mc.num_classes = classes;
  return mc;
}

}  // namespace

void BuildHashConfig::validate() const {
  require_positive(buckets, "--buckets");
  require_positive(layers, "--layers");
  require(buckets <= layers,
          fmt::format("--buckets {} exceeds --layers {}; each bucket needs its own layer", buckets,
                      layers));
  if (method == "random" || method == "frequency") {
    require(corpus.has_value(), fmt::format("--method {} requires --corpus", method));
  } else if (method == "mi") {
    require(corpus.has_value(), "--method mi requires --corpus");
    require(labeled, "--method mi requires a labeled corpus (--labeled)");
  } else if (method == "clustered") {
    require(embeddings.has_value(), "--method clustered requires --embeddings");
  } else {
    throw ConfigError(fmt::format(
        "--method must be one of random, frequency, mi, clustered (got '{}')", method));
  }
  require(method == "random" || consistent, "--consistent false applies only to --method random");
  require(!out.empty(), "--out must not be empty");
}

BuildHashResult cmd_build_hash(const GlobalOptions& global, const BuildHashConfig& config,
                               std::ostream& log) {
  config.validate();
  std::optional<Corpus> corpus;
  Vocab vocab;
  if (config.corpus) {
    corpus = load_corpus(*config.corpus, config.labeled);
    vocab = Vocab::from_documents(corpus->documents);
    require(!vocab.empty(), fmt::format("--corpus {} contains no tokens", config.corpus->string()));
    if (corpus->skipped_empty_lines) {
      log << fmt::format("skipped {} empty lines in {}\n", corpus->skipped_empty_lines,
                         config.corpus->string());
    }
  }

  BuildHashResult result;
  if (config.method == "random") {
    result.tables = build_random(vocab, config.buckets, config.layers, global.seed, config.consistent);
  } else if (config.method == "frequency") {
    result.tables = PhaseTables::consistent(
        build_frequency(vocab, compute_stats(*corpus, vocab), config.buckets, config.layers));
  } else if (config.method == "mi") {
    result.tables = PhaseTables::consistent(
        build_mi(vocab, compute_stats(*corpus, vocab), config.buckets, config.layers));
  } else {
    const auto emb = load_embeddings(*config.embeddings);
    if (!corpus) vocab = emb.vocab;
    result.tables = PhaseTables::consistent(
        build_clustered(vocab, emb, config.buckets, config.layers, global.seed));
  }

  const fs::path base = global.out_dir / config.out;
  auto save = [&](const HashTable& table, const fs::path& path, std::string_view label) {
    table.save(path);
    result.files.push_back(path);
    log_histogram(log, table, label);
    log << fmt::format("wrote {}\n", path.string());
  };
  if (config.consistent) {
    save(*result.tables.train, base, "table");
  } else {
    save(*result.tables.train, fs::path(base.string() + ".train"), "train-phase table");
    save(*result.tables.infer, fs::path(base.string() + ".infer"), "infer-phase table");
  }
  return result;
}

void FlopsReportConfig::validate() const {
  require(!table.empty(), "--table is required");
  require(!corpus.empty(), "--corpus is required");
  require_positive(layers, "--layers");
  require_positive(dims.hidden, "--d");
  require_positive(dims.heads, "--heads");
  require_positive(dims.ffn_hidden, "--d-ff");
  require(dims.hidden % dims.heads == 0, "--d must be divisible by --heads");
  if (baseline_layers) require_positive(*baseline_layers, "--baseline-layers");
  if (baseline_dims) {
    require_positive(baseline_dims->hidden, "--baseline-d");
    require_positive(baseline_dims->heads, "--baseline-heads");
    require_positive(baseline_dims->ffn_hidden, "--baseline-d-ff");
  }
}

FlopsReportResult cmd_flops_report(const GlobalOptions& global, const FlopsReportConfig& config,
                                   std::ostream& log) {
  config.validate();
  const auto table = HashTable::load(config.table);
  require(table.num_layers() == config.layers,
          fmt::format("--layers {} does not match L={} in --table {}", config.layers,
                      table.num_layers(), config.table.string()));
  const auto corpus = load_corpus(config.corpus, false);
  if (corpus.documents.empty()) {
    throw InputError(fmt::format("--corpus {} has no documents", config.corpus.string()));
  }

  ScheduleOptions opts;
  opts.pin_first = config.cls_token.has_value();
  std::vector<ExitSchedule> schedules;
  schedules.reserve(corpus.documents.size());
  for (const auto& doc : corpus.documents) {
    const auto ids = encode_document(table.vocab(), doc, config.cls_token);
    schedules.push_back(make_schedule(ids, table, config.layers, opts));
  }

  FlopsReportResult result;
  result.report = flops_report(config.dims, config.layers, schedules,
                               config.baseline_dims.value_or(config.dims),
                               config.baseline_layers.value_or(config.layers));

  const fs::path txt = global.out_dir / (config.out + ".txt");
  const fs::path csv = global.out_dir / (config.out + ".csv");
  {
    auto out = open_output(txt);
    write_report_text(out, result.report);
    check_written(out, txt);
  }
  {
    auto out = open_output(csv);
    write_report_csv(out, result.report);
    check_written(out, csv);
  }
  result.files = {txt, csv};
  log << fmt::format("{} sequences, model {} FLOPs, baseline {} FLOPs, speedup {:.3f}x\n",
                     result.report.sequences, result.report.model_flops(),
                     result.report.baseline_flops(), result.report.speedup());
  log << fmt::format("wrote {} and {}\n", txt.string(), csv.string());
  return result;
}

void InitModelConfig::validate() const {
  require(!table.empty(), "--table is required");
  require_positive(hidden, "--d");
  require_positive(heads, "--heads");
  require_positive(ffn_hidden, "--d-ff");
  require(hidden % heads == 0, "--d must be divisible by --heads");
  require(classes >= 2, "--classes must be at least 2");
}

fs::path cmd_init_model(const GlobalOptions& global, const InitModelConfig& config,
                        std::ostream& log) {
  config.validate();
  const auto table = HashTable::load(config.table);
  const std::size_t layers = config.layers ? config.layers : table.num_layers();
  const auto model = EncoderModel::random(
      toy_model_config(layers, config.hidden, config.heads, config.ffn_hidden, table.vocab().size(),
                       config.classes),
      global.seed);
  const fs::path path = global.out_dir / config.out;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  model.save(path);
  log << fmt::format("wrote {} (L={} d={} V={})\n", path.string(), layers, config.hidden,
                     table.vocab().size());
  return path;
}

void InferConfig::validate() const {
  require(!model.empty(), "--model is required");
  require(!table.empty(), "--table is required");
  require(!corpus.empty(), "--corpus is required");
}

InferResult cmd_infer(const GlobalOptions& global, const InferConfig& config, std::ostream& log) {
  config.validate();
  const auto model = EncoderModel::load(config.model);
  const auto table = HashTable::load(config.table);
  require(model.has_head(), fmt::format("--model {} has no classifier head", config.model.string()));
  require(table.num_layers() == model.num_layers(),
          fmt::format("--table has L={} but --model has {} layers", table.num_layers(),
                      model.num_layers()));
  require(table.vocab().size() <= model.config().vocab_size,
          fmt::format("--table vocabulary ({} tokens) exceeds the model's V={}",
                      table.vocab().size(), model.config().vocab_size));
  if (config.cls_token) {
    require(table.vocab().find(*config.cls_token).has_value(),
            fmt::format("--cls-token '{}' is not in the table vocabulary", *config.cls_token));
  }
  const auto corpus = load_corpus(config.corpus, false);
  if (corpus.documents.empty()) {
    throw InputError(fmt::format("--corpus {} has no documents", config.corpus.string()));
  }

  ScheduleOptions opts;
  opts.pin_first = config.cls_token.has_value();
  InferResult result;
  std::vector<ExitSchedule> schedules;
  for (const auto& doc : corpus.documents) {
    const auto ids = encode_document(table.vocab(), doc, config.cls_token);
    auto schedule = make_schedule(ids, table, model.num_layers(), opts);
    const auto trace = forward(model, ids, schedule);
    InferRow row;
    row.scores = classify(model, trace.final_states());
    row.prediction = argmax(row.scores);
    row.exit_layers = schedule.exit_layer;
    result.rows.push_back(std::move(row));
    schedules.push_back(std::move(schedule));
  }
  const LayerDims dims{model.config().hidden, model.config().heads, model.config().ffn_hidden};
  result.report = flops_report(dims, model.num_layers(), schedules, dims, model.num_layers());

  result.file = global.out_dir / config.out;
  auto out = open_output(result.file);
  out << "doc\tprediction\tscores\texit_layers\n";
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    const auto& row = result.rows[i];
    std::string scores, exits;
    for (std::size_t c = 0; c < row.scores.size(); ++c)
      scores += fmt::format("{}{:.17g}", c ? " " : "", row.scores[c]);
    for (std::size_t p = 0; p < row.exit_layers.size(); ++p)
      exits += fmt::format("{}{}", p ? " " : "", row.exit_layers[p]);
    out << fmt::format("{}\t{}\t{}\t{}\n", i, row.prediction, scores, exits);
  }
  check_written(out, result.file);
  log << fmt::format("{} documents, speedup {:.3f}x; wrote {}\n", result.rows.size(),
                     result.report.speedup(), result.file.string());
  return result;
}

void AblateConfig::validate() const {
  require(seeds.size() >= 2, "--seeds needs at least two seeds to estimate variance");
  require_positive(vocab_size, "--vocab-size");
  require_positive(seq_len, "--seq-len");
  require(num_classes >= 2, "--classes must be at least 2");
  require_positive(train_size, "--train-size");
  require_positive(test_size, "--test-size");
  require(label_noise >= 0.0 && label_noise <= 1.0, "--label-noise must lie in [0, 1]");
  require_positive(buckets, "--buckets");
  require_positive(layers, "--layers");
  require(buckets <= layers, fmt::format("--buckets {} exceeds --layers {}", buckets, layers));
  require_positive(hidden, "--d");
  require_positive(heads, "--heads");
  require(hidden % heads == 0, "--d must be divisible by --heads");
  require_positive(ffn_hidden, "--d-ff");
}

AblateResult cmd_ablate_consistency(const GlobalOptions& global, const AblateConfig& config,
                                    std::ostream& log) {
  config.validate();
  AblateResult result;
  std::vector<double> cons, incons;
  for (const auto seed : config.seeds) {
    const std::uint64_t run = derive_seed(global.seed, seed);
    SeparableTaskConfig tc;
    tc.vocab_size = config.vocab_size;
    tc.seq_len = config.seq_len;
    tc.num_classes = config.num_classes;
    tc.train_size = config.train_size;
    tc.test_size = config.test_size;
    tc.label_noise = config.label_noise;
    tc.seed = derive_seed(run, 0);
    const auto task = make_separable_task(tc);
    const auto model = EncoderModel::random(
        toy_model_config(config.layers, config.hidden, config.heads, config.ffn_hidden,
                         task.vocab.size(), config.num_classes),
        derive_seed(run, 1));

    TrainOptions opts;
    opts.epochs = config.epochs;
    opts.lr = config.lr;
    opts.seed = derive_seed(run, 2);
    opts.train_top_ffn = config.train_top_ffn;

    const std::uint64_t table_seed = derive_seed(run, 3);
    const auto cons_tables = build_random(task.vocab, config.buckets, config.layers, table_seed, true);
    const auto incons_tables =
        config.force_identical
            ? cons_tables
            : build_random(task.vocab, config.buckets, config.layers, table_seed, false);

    auto run_arm = [&](const PhaseTables& tables) {
      const auto trained = train_toy(model, task.train, tables, Phase::kTrain, opts);
      return accuracy(trained, task.test, table_for(tables, Phase::kInfer));
    };
    cons.push_back(run_arm(cons_tables));
    incons.push_back(run_arm(incons_tables));
    log << fmt::format("seed {:>4}  rand-cons {:.4f}  rand-incons {:.4f}\n", seed, cons.back(),
                       incons.back());
  }
  const auto mean = [](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  result.mean_cons = mean(cons);
  result.mean_incons = mean(incons);
  for (const auto& [arm, values, avg] :
       {std::tuple{"rand-cons", &cons, result.mean_cons},
        std::tuple{"rand-incons", &incons, result.mean_incons}}) {
    for (std::size_t i = 0; i < values->size(); ++i)
      result.rows.push_back({arm, std::to_string(config.seeds[i]), (*values)[i]});
    result.rows.push_back({arm, "mean", avg});
  }

  result.file = global.out_dir / config.out;
  auto out = open_output(result.file);
  out << "arm\tseed\taccuracy\n";
  for (const auto& row : result.rows)
    out << fmt::format("{}\t{}\t{:.6f}\n", row.arm, row.seed, row.accuracy);
  check_written(out, result.file);
  log << fmt::format("mean rand-cons {:.4f}  mean rand-incons {:.4f}; wrote {}\n",
                     result.mean_cons, result.mean_incons, result.file.string());
  return result;
}

void DifficultyConfig::validate() const {
  require(mode == "sentence" || mode == "token",
          fmt::format("--mode must be sentence or token (got '{}')", mode));
  require_positive(vocab_size, "--vocab-size");
  require_positive(seq_len, "--seq-len");
  require(num_classes >= 2, "--classes must be at least 2");
  require_positive(train_size, "--train-size");
  require_positive(test_size, "--test-size");
  require(label_noise >= 0.0 && label_noise <= 1.0, "--label-noise must lie in [0, 1]");
  require_positive(layers, "--layers");
  require_positive(hidden, "--d");
  require_positive(heads, "--heads");
  require(hidden % heads == 0, "--d must be divisible by --heads");
  require_positive(ffn_hidden, "--d-ff");
  require(floor > 0.0 && floor < 1.0, "--floor must lie in (0, 1)");
}

DifficultyResult cmd_difficulty(const GlobalOptions& global, const DifficultyConfig& config,
                                std::ostream& log) {
  config.validate();
  const std::uint64_t seed = global.seed;
  AnnotatorOptions annotator_opts{config.annotator_epochs, config.annotator_lr};
  LayerPrediction override;
  if (config.perfect_annotator) {
    override = [](std::size_t, std::size_t gold, std::span<const double>) { return gold; };
  }

  Vocab vocab;
  DifficultyDataset train, test;
  std::optional<EncoderModel> model;
  if (config.mode == "sentence") {
    SeparableTaskConfig tc;
    tc.vocab_size = config.vocab_size;
    tc.seq_len = config.seq_len;
    tc.num_classes = config.num_classes;
    tc.train_size = config.train_size;
    tc.test_size = config.test_size;
    tc.label_noise = config.label_noise;
    tc.seed = derive_seed(seed, 0);
    const auto task = make_separable_task(tc);
    vocab = task.vocab;
    model = EncoderModel::random(toy_model_config(config.layers, config.hidden, config.heads,
                                                  config.ffn_hidden, vocab.size(), 0),
                                 derive_seed(seed, 1));
    const auto annotator = train_annotator(*model, task.train, config.num_classes, annotator_opts);
    train = annotate(annotator, task.train, override);
    test = annotate(annotator, task.test, override);
  } else {
    TokenTaskConfig tc;
    tc.vocab_size = config.vocab_size;
    tc.seq_len = config.seq_len;
    tc.num_classes = config.num_classes;
    tc.size = config.train_size + config.test_size;
    tc.label_noise = config.label_noise;
    tc.seed = derive_seed(seed, 0);
    const auto task = make_token_task(tc);
    vocab = task.vocab;
    model = EncoderModel::random(toy_model_config(config.layers, config.hidden, config.heads,
                                                  config.ffn_hidden, vocab.size(), 0),
                                 derive_seed(seed, 1));
    const std::span<const TokenLabeledSequence> all(task.sequences);
    const auto train_part = all.first(config.train_size);
    const auto test_part = all.subspan(config.train_size);
    const auto annotator =
        train_token_annotator(*model, train_part, config.num_classes, annotator_opts);
    train = annotate_tokens(annotator, train_part, override);
    test = annotate_tokens(annotator, test_part, override);
  }

  DifficultyResult result;
  auto balanced = oversample(train, derive_seed(seed, 2), OversampleOptions{config.floor, 10});
  result.warnings = std::move(balanced.warnings);
  for (const auto& w : result.warnings) log << "warning: " << w << '\n';
  log << fmt::format("annotated {} train / {} test instances; oversampling added {}\n",
                     train.size(), test.size(), balanced.added);
  result.train = std::move(balanced.dataset);
  result.test = std::move(test);

  LinearBOptions lb;
  lb.epochs = config.predictor_epochs;
  lb.lr = config.predictor_lr;
  lb.seed = derive_seed(seed, 3);
  lb.shared = !config.per_layer;

  const auto majority = MajorityPredictor::fit(result.train);
  result.metrics.push_back({majority.name(), evaluate(majority, result.test)});
  if (config.mode == "sentence") {
    const auto linear_m = LinearMPredictor::fit(result.train, model->embedding(), lb);
    result.metrics.push_back({linear_m.name(), evaluate(linear_m, result.test)});
  }
  const auto linear_b = LinearBPredictor::fit(result.train, lb);
  result.metrics.push_back({linear_b.name(), evaluate(linear_b, result.test)});

  const fs::path base = global.out_dir;
  const fs::path train_path = base / (config.prefix + "_train.tsv");
  const fs::path test_path = base / (config.prefix + "_test.tsv");
  const fs::path metrics_path = base / (config.prefix + "_metrics.tsv");
  for (const auto& [path, data] : {std::pair{train_path, &result.train},
                                   std::pair{test_path, &result.test}}) {
    auto out = open_output(path);
    write_difficulty_dataset(out, *data, vocab);
    check_written(out, path);
  }
  {
    auto out = open_output(metrics_path);
    write_metrics(out, result.metrics);
    check_written(out, metrics_path);
  }
  write_metrics(log, result.metrics);
  result.files = {train_path, test_path, metrics_path};
  log << fmt::format("wrote {}, {}, {}\n", train_path.string(), test_path.string(),
                     metrics_path.string());
  return result;
}

}  // namespace hashee::cli
