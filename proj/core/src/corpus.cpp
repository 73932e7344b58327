// Copyright 2026 The hashee Authors
// SPDX-License-Identifier: Apache-2.0

#include "hashee/corpus.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include <fmt/core.h>

#include "hashee/error.hpp"

namespace hashee {
namespace {

Document tokenize(const std::string& text) {
  Document doc;
  std::istringstream ss(text);
  std::string tok;
  while (ss >> tok) doc.push_back(std::move(tok));
  return doc;
}

bool is_blank(const std::string& line) {
  return line.find_first_not_of(" \t\r\n\f\v") == std::string::npos;
}

}  // namespace

Corpus parse_corpus(std::istream& in, bool labeled, const std::string& source) {
  Corpus corpus;
  if (labeled) corpus.labels.emplace();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank(line)) {
      ++corpus.skipped_empty_lines;
      continue;
    }
    if (!labeled) {
      corpus.documents.push_back(tokenize(line));
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ParseError(source, lineno, "labeled line has no tab separating label and text");
    }
    std::string label = line.substr(0, tab);
    if (label.empty()) throw ParseError(source, lineno, "empty label");
    corpus.labels->push_back(std::move(label));
    corpus.documents.push_back(tokenize(line.substr(tab + 1)));
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, bool labeled) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot open corpus '{}'", path.string()));
  return parse_corpus(in, labeled, path.string());
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (std::size_t i = 0; i < corpus.documents.size(); ++i) {
    if (corpus.labels) out << (*corpus.labels)[i] << '\t';
    const auto& doc = corpus.documents[i];
    for (std::size_t t = 0; t < doc.size(); ++t) {
      if (t) out << ' ';
      out << doc[t];
    }
    out << '\n';
  }
}

void save_corpus(const std::filesystem::path& path, const Corpus& corpus) {
  std::ofstream out(path);
  if (!out) throw InputError(fmt::format("cannot write corpus '{}'", path.string()));
  write_corpus(out, corpus);
}

CorpusStats compute_stats(const Corpus& corpus, const Vocab& vocab) {
  CorpusStats stats;
  const std::size_t v = vocab.size();
  stats.freq.assign(v, 0);
  stats.doc_freq.assign(v, 0);
  stats.doc_count = corpus.documents.size();

  std::vector<std::size_t> label_of_doc;
  if (corpus.labels) {
    if (corpus.labels->size() != corpus.documents.size()) {
      throw InputError("corpus labels do not align with documents");
    }
    std::unordered_map<std::string, std::size_t> label_index;
    for (const auto& label : *corpus.labels) {
      auto [it, inserted] = label_index.emplace(label, stats.label_set.size());
      if (inserted) {
        stats.label_set.push_back(label);
        stats.label_doc_count.push_back(0);
      }
      ++stats.label_doc_count[it->second];
      label_of_doc.push_back(it->second);
    }
    stats.cooccur.assign(v, std::vector<std::uint64_t>(stats.label_set.size(), 0));
  }

  // Last document index that touched each token, for presence counting.
  std::vector<std::size_t> seen_in(v, SIZE_MAX);
  for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
    for (const auto& tok : corpus.documents[d]) {
      const TokenId id = vocab.id(tok);
      if (id == kUnknownToken) continue;
      ++stats.freq[id];
      if (seen_in[id] == d) continue;
      seen_in[id] = d;
      ++stats.doc_freq[id];
      if (!label_of_doc.empty()) ++stats.cooccur[id][label_of_doc[d]];
    }
  }
  return stats;
}

}  // namespace hashee
