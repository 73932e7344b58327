// Copyright 2026 The hashee Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "hashee/matrix.hpp"
#include "hashee/vocab.hpp"

namespace hashee {

// Token embeddings, one row per token of `vocab`.
struct EmbeddingTable {
  Vocab vocab;
  Matrix vectors;  // vocab.size() x dim

  std::size_t dim() const noexcept { return vectors.cols(); }
};

// Format: first line `<V> <dim>`, then `<token> <dim reals>` per line.
EmbeddingTable parse_embeddings(std::istream& in, const std::string& source = "<stream>");
EmbeddingTable load_embeddings(const std::filesystem::path& path);
void write_embeddings(std::ostream& out, const EmbeddingTable& table);

// Rows of `table` reordered to follow `vocab` ids. Throws InputError naming
// the first vocabulary token without an embedding.
Matrix align_embeddings(const EmbeddingTable& table, const Vocab& vocab);

struct KMeansOptions {
  std::size_t max_iter = 50;
  double tol = 1e-6;  // stop once total centroid movement (L2) drops below this
};

struct KMeansResult {
  std::vector<std::size_t> assignment;  // point -> cluster
  Matrix centroids;                     // k x dim
  double inertia = 0.0;                 // sum of squared distances to assigned centroid
  std::size_t iterations = 0;
};

// Lloyd's algorithm with k-means++ seeding. A cluster left empty after an
// assignment step claims the point farthest from its current centroid among
// clusters that can spare one. Deterministic for a fixed seed.
KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed,
                    const KMeansOptions& options = {});

}  // namespace hashee
