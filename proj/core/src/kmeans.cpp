// Copyright 2026 The hashee Authors
// SPDX-License-Identifier: Apache-2.0

#include "hashee/kmeans.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <fmt/core.h>

#include "hashee/error.hpp"
#include "hashee/random.hpp"

namespace hashee {
namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

Matrix seed_plus_plus(const Matrix& points, std::size_t k, Rng& rng) {
  const std::size_t n = points.rows();
  Matrix centroids(k, points.cols());
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  std::vector<bool> chosen(n, false);

  std::size_t pick = rng.below(n);
  for (std::size_t c = 0; c < k; ++c) {
    if (c > 0) {
      double total = 0.0;
      for (double d : nearest) total += d;
      if (total > 0.0) {
        double target = rng.uniform() * total;
        // Rounding can exhaust the loop; `pick` then holds the last candidate.
        for (std::size_t i = 0; i < n; ++i) {
          if (nearest[i] <= 0.0) continue;
          pick = i;
          target -= nearest[i];
          if (target < 0.0) break;
        }
      } else {
        // Every point coincides with a centroid; fall back to an unchosen point.
        std::vector<std::size_t> free;
        for (std::size_t i = 0; i < n; ++i)
          if (!chosen[i]) free.push_back(i);
        pick = free.empty() ? rng.below(n) : free[rng.below(free.size())];
      }
    }
    chosen[pick] = true;
    std::copy_n(points.row(pick).begin(), points.cols(), centroids.row(c).begin());
    for (std::size_t i = 0; i < n; ++i)
      nearest[i] = std::min(nearest[i], squared_distance(points.row(i), centroids.row(c)));
  }
  return centroids;
}

void assign(const Matrix& points, const Matrix& centroids, std::vector<std::size_t>& assignment) {
  for (std::size_t i = 0; i < points.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_c = 0;
    for (std::size_t c = 0; c < centroids.rows(); ++c) {
      const double d = squared_distance(points.row(i), centroids.row(c));
      if (d < best) {
        best = d;
        best_c = c;
      }
    }
    assignment[i] = best_c;
  }
}

void repair_empty(const Matrix& points, Matrix& centroids, std::vector<std::size_t>& assignment) {
  const std::size_t k = centroids.rows();
  std::vector<std::size_t> counts(k, 0);
  for (auto a : assignment) ++counts[a];
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] > 0) continue;
    double worst = -1.0;
    std::size_t victim = 0;
    for (std::size_t i = 0; i < points.rows(); ++i) {
      if (counts[assignment[i]] < 2) continue;
      const double d = squared_distance(points.row(i), centroids.row(assignment[i]));
      if (d > worst) {
        worst = d;
        victim = i;
      }
    }
    --counts[assignment[victim]];
    assignment[victim] = c;
    counts[c] = 1;
    std::copy_n(points.row(victim).begin(), points.cols(), centroids.row(c).begin());
  }
}

}  // namespace

EmbeddingTable parse_embeddings(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source, 1, "missing '<V> <dim>' header");
  std::size_t count = 0, dim = 0;
  {
    std::istringstream header(line);
    std::string extra;
    if (!(header >> count >> dim) || (header >> extra) || dim == 0) {
      throw ParseError(source, 1, "expected '<V> <dim>' header");
    }
  }
  EmbeddingTable table;
  std::vector<double> data;
  data.reserve(count * dim);
  std::size_t lineno = 1;
  while (table.vocab.size() < count && std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string token;
    if (!(ss >> token)) throw ParseError(source, lineno, "empty embedding line");
    if (table.vocab.find(token)) throw ParseError(source, lineno, "duplicate token '" + token + "'");
    for (std::size_t j = 0; j < dim; ++j) {
      double v;
      if (!(ss >> v) || !std::isfinite(v)) {
        throw ParseError(source, lineno, fmt::format("expected {} finite reals", dim));
      }
      data.push_back(v);
    }
    std::string extra;
    if (ss >> extra) throw ParseError(source, lineno, fmt::format("more than {} values", dim));
    table.vocab.add(std::move(token));
  }
  if (table.vocab.size() != count) {
    throw ParseError(source, lineno, fmt::format("header promises {} vectors, found {}", count,
                                                 table.vocab.size()));
  }
  table.vectors = Matrix(count, dim, std::move(data));
  return table;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot open embeddings '{}'", path.string()));
  return parse_embeddings(in, path.string());
}

void write_embeddings(std::ostream& out, const EmbeddingTable& table) {
  out << table.vocab.size() << ' ' << table.dim() << '\n';
  for (std::size_t t = 0; t < table.vocab.size(); ++t) {
    out << table.vocab.token(static_cast<TokenId>(t));
    for (double v : table.vectors.row(t)) out << ' ' << fmt::format("{:.17g}", v);
    out << '\n';
  }
}

Matrix align_embeddings(const EmbeddingTable& table, const Vocab& vocab) {
  Matrix out(vocab.size(), table.dim());
  for (std::size_t t = 0; t < vocab.size(); ++t) {
    const auto& token = vocab.token(static_cast<TokenId>(t));
    const auto row = table.vocab.find(token);
    if (!row) throw InputError(fmt::format("no embedding for token '{}'", token));
    std::copy_n(table.vectors.row(*row).begin(), table.dim(), out.row(t).begin());
  }
  return out;
}

KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed,
                    const KMeansOptions& options) {
  const std::size_t n = points.rows();
  if (k == 0) throw ConfigError("k-means needs k >= 1");
  if (k > n) throw ConfigError(fmt::format("k-means with k={} exceeds {} points", k, n));

  Rng rng(seed);
  KMeansResult result;
  result.centroids = seed_plus_plus(points, k, rng);
  result.assignment.assign(n, 0);

  for (std::size_t iter = 0; iter < std::max<std::size_t>(options.max_iter, 1); ++iter) {
    assign(points, result.centroids, result.assignment);
    repair_empty(points, result.centroids, result.assignment);

    Matrix next(k, points.cols());
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto dst = next.row(result.assignment[i]);
      const auto src = points.row(i);
      for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
      ++counts[result.assignment[i]];
    }
    double movement = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      auto row = next.row(c);
      for (double& v : row) v /= static_cast<double>(counts[c]);
      movement += std::sqrt(squared_distance(row, result.centroids.row(c)));
    }
    result.centroids = std::move(next);
    result.iterations = iter + 1;
    if (movement < options.tol) break;
  }

  result.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    result.inertia += squared_distance(points.row(i), result.centroids.row(result.assignment[i]));
  return result;
}

}  // namespace hashee
