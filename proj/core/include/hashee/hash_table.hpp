// Copyright 2026 The hashee Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hashee/corpus.hpp"
#include "hashee/kmeans.hpp"
#include "hashee/vocab.hpp"

namespace hashee {

enum class HashMethod {
  kRandCons,
  kRandInconsA,  // train-phase table of an inconsistent pair
  kRandInconsB,  // infer-phase table of an inconsistent pair
  kFrequency,
  kMutualInfo,
  kClustered,
};

std::string_view to_string(HashMethod method);
std::optional<HashMethod> parse_hash_method(std::string_view name);

// Exit layer (1-based) for bucket `bucket` of `num_buckets` in an
// `num_layers`-layer model: 1 + floor(L * b / B). Throws ConfigError unless
// 1 <= B <= L and b < B.
std::size_t bucket_to_layer(std::size_t bucket, std::size_t num_buckets, std::size_t num_layers);

// Immutable token -> (bucket, exit layer) lookup.
class HashTable {
 public:
  HashTable(HashMethod method, std::size_t num_buckets, std::size_t num_layers, std::uint64_t seed,
            Vocab vocab, std::vector<std::uint32_t> bucket_of);

  HashMethod method() const noexcept { return method_; }
  std::size_t num_buckets() const noexcept { return num_buckets_; }
  std::size_t num_layers() const noexcept { return num_layers_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const Vocab& vocab() const noexcept { return vocab_; }
  std::size_t size() const noexcept { return bucket_of_.size(); }

  std::size_t bucket_of(TokenId token) const { return bucket_of_.at(token); }

  // Tokens outside the table (including kUnknownToken) run the full depth.
  std::size_t layer_of(TokenId token) const {
    return token < layer_of_.size() ? layer_of_[token] : num_layers_;
  }

  std::vector<std::size_t> bucket_sizes() const;

  // `#hashee v1 method=<m> B=<B> L=<L> seed=<s>` then `<token>\t<bucket>\t<layer>`.
  void write(std::ostream& out) const;
  std::string serialize() const;
  static HashTable parse(std::istream& in, const std::string& source = "<stream>");
  static HashTable parse(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static HashTable load(const std::filesystem::path& path);

  friend bool operator==(const HashTable& a, const HashTable& b) {
    return a.method_ == b.method_ && a.num_buckets_ == b.num_buckets_ &&
           a.num_layers_ == b.num_layers_ && a.seed_ == b.seed_ && a.vocab_ == b.vocab_ &&
           a.bucket_of_ == b.bucket_of_;
  }

 private:
  HashMethod method_;
  std::size_t num_buckets_;
  std::size_t num_layers_;
  std::uint64_t seed_;
  Vocab vocab_;
  std::vector<std::uint32_t> bucket_of_;
  std::vector<std::size_t> layer_of_;
};

// Tables used while training and while running inference. Consistent
// pairs hold the same object twice.
struct PhaseTables {
  std::shared_ptr<const HashTable> train;
  std::shared_ptr<const HashTable> infer;

  static PhaseTables consistent(HashTable table);
  static PhaseTables split(HashTable train, HashTable infer);

  bool is_consistent() const noexcept { return train == infer; }
};

enum class Phase { kTrain, kInfer };

inline const HashTable& table_for(const PhaseTables& tables, Phase phase) {
  return phase == Phase::kTrain ? *tables.train : *tables.infer;
}

// Sizes of B equal chunks over V items: the first V mod B get ceil(V/B).
std::vector<std::size_t> equal_chunk_sizes(std::size_t count, std::size_t num_buckets);

// Uniform random equal-size partition. consistent=true returns one table
// used for both phases; otherwise two tables from independent child seeds.
PhaseTables build_random(const Vocab& vocab, std::size_t num_buckets, std::size_t num_layers,
                         std::uint64_t seed, bool consistent);

// Descending frequency (ties: ascending id), equal chunks, chunk 0 -> layer 1.
HashTable build_frequency(const Vocab& vocab, const CorpusStats& stats, std::size_t num_buckets,
                          std::size_t num_layers);

// Mutual information (nats) between document-level presence of `token` and
// the document label, from empirical document fractions.
double token_label_mi(const CorpusStats& stats, TokenId token);

// Descending MI (ties: ascending id), equal chunks, chunk 0 -> layer 1.
HashTable build_mi(const Vocab& vocab, const CorpusStats& stats, std::size_t num_buckets,
                   std::size_t num_layers);

// k-means with k = B over the token embeddings; clusters ranked by mean L2
// norm of their members (ascending, ties by cluster index) become buckets.
HashTable build_clustered(const Vocab& vocab, const EmbeddingTable& embeddings,
                          std::size_t num_buckets, std::size_t num_layers, std::uint64_t seed,
                          const KMeansOptions& options = {});

}  // namespace hashee
