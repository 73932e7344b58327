// Copyright 2026 The hashee Authors
// SPDX-License-Identifier: Apache-2.0

#include "hashee/hash_table.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <fmt/core.h>

#include "hashee/error.hpp"
#include "hashee/random.hpp"

namespace hashee {
namespace {

constexpr std::array<std::pair<HashMethod, std::string_view>, 6> kMethodNames{{
    {HashMethod::kRandCons, "rand-cons"},
    {HashMethod::kRandInconsA, "rand-incons-A"},
    {HashMethod::kRandInconsB, "rand-incons-B"},
    {HashMethod::kFrequency, "frequency"},
    {HashMethod::kMutualInfo, "mi"},
    {HashMethod::kClustered, "clustered"},
}};

void check_bucket_config(std::size_t num_buckets, std::size_t num_layers) {
  if (num_layers == 0) throw ConfigError("number of layers must be at least 1");
  if (num_buckets == 0) throw ConfigError("number of buckets must be at least 1");
  if (num_buckets > num_layers) {
    throw ConfigError(fmt::format("buckets ({}) must not exceed layers ({})", num_buckets,
                                  num_layers));
  }
}

// Assigns buckets by walking `order` in equal chunks.
std::vector<std::uint32_t> chunk_assign(std::span<const TokenId> order, std::size_t num_buckets) {
  std::vector<std::uint32_t> bucket_of(order.size(), 0);
  const auto sizes = equal_chunk_sizes(order.size(), num_buckets);
  std::size_t pos = 0;
  for (std::size_t b = 0; b < sizes.size(); ++b) {
    for (std::size_t i = 0; i < sizes[b]; ++i) bucket_of[order[pos++]] = static_cast<std::uint32_t>(b);
  }
  return bucket_of;
}

// Token ids ordered by descending key, ties by ascending id.
std::vector<TokenId> descending_order(std::span<const double> key) {
  std::vector<TokenId> order(key.size());
  std::iota(order.begin(), order.end(), TokenId{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](TokenId a, TokenId b) { return key[a] > key[b]; });
  return order;
}

HashTable random_table(HashMethod method, const Vocab& vocab, std::size_t num_buckets,
                       std::size_t num_layers, std::uint64_t seed, std::uint64_t stream) {
  std::vector<TokenId> order(vocab.size());
  std::iota(order.begin(), order.end(), TokenId{0});
  Rng rng(derive_seed(seed, stream));
  rng.shuffle(std::span<TokenId>(order));
  return HashTable(method, num_buckets, num_layers, seed, vocab, chunk_assign(order, num_buckets));
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

// Value of `key=` in a whitespace-separated header field.
std::string_view header_field(std::string_view field, std::string_view key) {
  if (field.size() <= key.size() || field.substr(0, key.size()) != key ||
      field[key.size()] != '=') {
    return {};
  }
  return field.substr(key.size() + 1);
}

}  // namespace

std::string_view to_string(HashMethod method) {
  for (const auto& [m, name] : kMethodNames)
    if (m == method) return name;
  return "unknown";
}

std::optional<HashMethod> parse_hash_method(std::string_view name) {
  for (const auto& [m, n] : kMethodNames)
    if (n == name) return m;
  return std::nullopt;
}

std::size_t bucket_to_layer(std::size_t bucket, std::size_t num_buckets, std::size_t num_layers) {
  check_bucket_config(num_buckets, num_layers);
  if (bucket >= num_buckets) {
    throw ConfigError(fmt::format("bucket {} out of range for {} buckets", bucket, num_buckets));
  }
  return 1 + (num_layers * bucket) / num_buckets;
}

HashTable::HashTable(HashMethod method, std::size_t num_buckets, std::size_t num_layers,
                     std::uint64_t seed, Vocab vocab, std::vector<std::uint32_t> bucket_of)
    : method_(method),
      num_buckets_(num_buckets),
      num_layers_(num_layers),
      seed_(seed),
      vocab_(std::move(vocab)),
      bucket_of_(std::move(bucket_of)) {
  check_bucket_config(num_buckets_, num_layers_);
  if (bucket_of_.size() != vocab_.size()) {
    throw InputError(fmt::format("hash table has {} buckets for {} tokens", bucket_of_.size(),
                                 vocab_.size()));
  }
  layer_of_.reserve(bucket_of_.size());
  for (auto b : bucket_of_) layer_of_.push_back(bucket_to_layer(b, num_buckets_, num_layers_));
}

std::vector<std::size_t> HashTable::bucket_sizes() const {
  std::vector<std::size_t> sizes(num_buckets_, 0);
  for (auto b : bucket_of_) ++sizes[b];
  return sizes;
}

void HashTable::write(std::ostream& out) const {
  out << "#hashee v1 method=" << to_string(method_) << " B=" << num_buckets_
      << " L=" << num_layers_ << " seed=" << seed_ << '\n';
  for (std::size_t t = 0; t < bucket_of_.size(); ++t) {
    out << vocab_.token(static_cast<TokenId>(t)) << '\t' << bucket_of_[t] << '\t' << layer_of_[t]
        << '\n';
  }
}

std::string HashTable::serialize() const {
  std::ostringstream out;
  write(out);
  return out.str();
}

HashTable HashTable::parse(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source, 1, "missing hash table header");

  std::istringstream header(line);
  std::string magic, version, f_method, f_b, f_l, f_seed, extra;
  header >> magic >> version >> f_method >> f_b >> f_l >> f_seed;
  if (magic != "#hashee" || version != "v1" || (header >> extra)) {
    throw ParseError(source, 1, "expected '#hashee v1 method=<m> B=<B> L=<L> seed=<s>'");
  }
  const auto method = parse_hash_method(header_field(f_method, "method"));
  std::size_t num_buckets = 0, num_layers = 0;
  std::uint64_t seed = 0;
  if (!method) throw ParseError(source, 1, "unknown or missing method");
  if (!parse_number(header_field(f_b, "B"), num_buckets) ||
      !parse_number(header_field(f_l, "L"), num_layers) ||
      !parse_number(header_field(f_seed, "seed"), seed)) {
    throw ParseError(source, 1, "malformed B, L, or seed field");
  }
  try {
    check_bucket_config(num_buckets, num_layers);
  } catch (const ConfigError& e) {
    throw ParseError(source, 1, e.what());
  }

  Vocab vocab;
  std::vector<std::uint32_t> bucket_of;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) throw ParseError(source, lineno, "expected <token>\\t<bucket>\\t<layer>");
    const std::string_view view(line);
    std::uint32_t bucket = 0;
    std::size_t layer = 0;
    if (!parse_number(view.substr(t1 + 1, t2 - t1 - 1), bucket) ||
        !parse_number(view.substr(t2 + 1), layer)) {
      throw ParseError(source, lineno, "malformed bucket or layer");
    }
    if (bucket >= num_buckets) throw ParseError(source, lineno, "bucket out of range");
    if (layer != bucket_to_layer(bucket, num_buckets, num_layers)) {
      throw ParseError(source, lineno,
                       fmt::format("layer {} does not match bucket {}", layer, bucket));
    }
    std::string token = line.substr(0, t1);
    if (vocab.find(token)) throw ParseError(source, lineno, "duplicate token '" + token + "'");
    try {
      vocab.add(std::move(token));
    } catch (const InputError& e) {
      throw ParseError(source, lineno, e.what());
    }
    bucket_of.push_back(bucket);
  }
  return HashTable(*method, num_buckets, num_layers, seed, std::move(vocab), std::move(bucket_of));
}

HashTable HashTable::parse(const std::string& text) {
  std::istringstream in(text);
  return parse(in);
}

void HashTable::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(fmt::format("cannot write hash table '{}'", path.string()));
  write(out);
}

HashTable HashTable::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(fmt::format("cannot open hash table '{}'", path.string()));
  return parse(in, path.string());
}

PhaseTables PhaseTables::consistent(HashTable table) {
  auto shared = std::make_shared<const HashTable>(std::move(table));
  return {shared, shared};
}

PhaseTables PhaseTables::split(HashTable train, HashTable infer) {
  return {std::make_shared<const HashTable>(std::move(train)),
          std::make_shared<const HashTable>(std::move(infer))};
}

std::vector<std::size_t> equal_chunk_sizes(std::size_t count, std::size_t num_buckets) {
  std::vector<std::size_t> sizes(num_buckets, count / num_buckets);
  for (std::size_t b = 0; b < count % num_buckets; ++b) ++sizes[b];
  return sizes;
}

PhaseTables build_random(const Vocab& vocab, std::size_t num_buckets, std::size_t num_layers,
                         std::uint64_t seed, bool consistent) {
  check_bucket_config(num_buckets, num_layers);
  if (vocab.empty()) throw ConfigError("random hash needs a non-empty vocabulary");
  if (consistent) {
    return PhaseTables::consistent(
        random_table(HashMethod::kRandCons, vocab, num_buckets, num_layers, seed, 0));
  }
  return PhaseTables::split(
      random_table(HashMethod::kRandInconsA, vocab, num_buckets, num_layers, seed, 1),
      random_table(HashMethod::kRandInconsB, vocab, num_buckets, num_layers, seed, 2));
}

HashTable build_frequency(const Vocab& vocab, const CorpusStats& stats, std::size_t num_buckets,
                          std::size_t num_layers) {
  check_bucket_config(num_buckets, num_layers);
  if (stats.freq.size() != vocab.size()) {
    throw InputError(fmt::format("frequency statistics cover {} tokens, vocabulary has {}",
                                 stats.freq.size(), vocab.size()));
  }
  std::vector<double> key(stats.freq.begin(), stats.freq.end());
  const auto order = descending_order(key);
  return HashTable(HashMethod::kFrequency, num_buckets, num_layers, 0, vocab,
                   chunk_assign(order, num_buckets));
}

double token_label_mi(const CorpusStats& stats, TokenId token) {
  if (!stats.labeled()) throw ConfigError("mutual information needs a labeled corpus");
  if (token >= stats.doc_freq.size()) throw InputError("token outside corpus statistics");
  if (stats.doc_count == 0) return 0.0;

  const double n = static_cast<double>(stats.doc_count);
  const double p_present = static_cast<double>(stats.doc_freq[token]) / n;
  double mi = 0.0;
  for (std::size_t y = 0; y < stats.label_set.size(); ++y) {
    const double p_y = static_cast<double>(stats.label_doc_count[y]) / n;
    const auto with = stats.cooccur[token][y];
    const double joint[2] = {static_cast<double>(stats.label_doc_count[y] - with) / n,
                             static_cast<double>(with) / n};
    const double marginal[2] = {1.0 - p_present, p_present};
    for (int t = 0; t < 2; ++t) {
      if (joint[t] > 0.0) mi += joint[t] * std::log(joint[t] / (marginal[t] * p_y));
    }
  }
  // Rounding can leave a tiny negative value for independent variables.
  return std::max(mi, 0.0);
}

HashTable build_mi(const Vocab& vocab, const CorpusStats& stats, std::size_t num_buckets,
                   std::size_t num_layers) {
  check_bucket_config(num_buckets, num_layers);
  if (!stats.labeled()) throw ConfigError("MI hash needs a labeled corpus");
  if (stats.doc_freq.size() != vocab.size()) {
    throw InputError("corpus statistics do not cover the vocabulary");
  }
  std::vector<double> key(vocab.size());
  for (std::size_t t = 0; t < key.size(); ++t) key[t] = token_label_mi(stats, static_cast<TokenId>(t));
  const auto order = descending_order(key);
  return HashTable(HashMethod::kMutualInfo, num_buckets, num_layers, 0, vocab,
                   chunk_assign(order, num_buckets));
}

HashTable build_clustered(const Vocab& vocab, const EmbeddingTable& embeddings,
                          std::size_t num_buckets, std::size_t num_layers, std::uint64_t seed,
                          const KMeansOptions& options) {
  check_bucket_config(num_buckets, num_layers);
  const Matrix points = align_embeddings(embeddings, vocab);
  const auto clusters = kmeans(points, num_buckets, seed, options);

  std::vector<double> norm_sum(num_buckets, 0.0);
  std::vector<std::size_t> members(num_buckets, 0);
  for (std::size_t t = 0; t < points.rows(); ++t) {
    double sq = 0.0;
    for (double v : points.row(t)) sq += v * v;
    norm_sum[clusters.assignment[t]] += std::sqrt(sq);
    ++members[clusters.assignment[t]];
  }
  std::vector<double> mean_norm(num_buckets, 0.0);
  for (std::size_t c = 0; c < num_buckets; ++c)
    if (members[c]) mean_norm[c] = norm_sum[c] / static_cast<double>(members[c]);

  std::vector<std::size_t> rank_order(num_buckets);
  std::iota(rank_order.begin(), rank_order.end(), std::size_t{0});
  std::stable_sort(rank_order.begin(), rank_order.end(),
                   [&](std::size_t a, std::size_t b) { return mean_norm[a] < mean_norm[b]; });
  std::vector<std::uint32_t> bucket_of_cluster(num_buckets);
  for (std::size_t r = 0; r < num_buckets; ++r)
    bucket_of_cluster[rank_order[r]] = static_cast<std::uint32_t>(r);

  std::vector<std::uint32_t> bucket_of(points.rows());
  for (std::size_t t = 0; t < points.rows(); ++t)
    bucket_of[t] = bucket_of_cluster[clusters.assignment[t]];
  return HashTable(HashMethod::kClustered, num_buckets, num_layers, seed, vocab,
                   std::move(bucket_of));
}

}  // namespace hashee
