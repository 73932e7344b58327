// Copyright 2026 The hashee Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hashee/vocab.hpp"

namespace hashee {

using Document = std::vector<std::string>;

struct Corpus {
  std::vector<Document> documents;
  // Present for labeled corpora; aligned 1:1 with documents.
  std::optional<std::vector<std::string>> labels;
  // Blank input lines dropped while loading.
  std::size_t skipped_empty_lines = 0;

  bool labeled() const noexcept { return labels.has_value(); }
};

// Unlabeled: one whitespace-tokenized document per line.
// Labeled: `<label>\t<text>` per line.
// `source` names the stream in ParseError messages.
Corpus parse_corpus(std::istream& in, bool labeled, const std::string& source = "<stream>");
Corpus load_corpus(const std::filesystem::path& path, bool labeled);

void write_corpus(std::ostream& out, const Corpus& corpus);
void save_corpus(const std::filesystem::path& path, const Corpus& corpus);

// Token and label statistics over a corpus, indexed by vocabulary id.
struct CorpusStats {
  std::vector<std::uint64_t> freq;      // occurrences of each token
  std::vector<std::uint64_t> doc_freq;  // documents containing each token
  std::uint64_t doc_count = 0;

  // Labeled statistics; empty for unlabeled corpora.
  std::vector<std::string> label_set;             // distinct labels, first-appearance order
  std::vector<std::uint64_t> label_doc_count;     // documents per label
  std::vector<std::vector<std::uint64_t>> cooccur;  // [token][label] documents with both

  bool labeled() const noexcept { return !label_set.empty(); }
};

// Tokens absent from `vocab` are ignored.
CorpusStats compute_stats(const Corpus& corpus, const Vocab& vocab);

}  // namespace hashee
