// Copyright 2026 The hashee Authors
// SPDX-License-Identifier: Apache-2.0

#include "hashee/vocab.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/core.h>

#include "hashee/error.hpp"

namespace hashee {
namespace {

bool has_whitespace(std::string_view s) {
  return std::any_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

}  // namespace

Vocab::Vocab(std::vector<std::string> tokens) {
  tokens_.reserve(tokens.size());
  for (auto& t : tokens) {
    if (index_.contains(t)) throw InputError(fmt::format("duplicate vocabulary token '{}'", t));
    add(std::move(t));
  }
}

Vocab Vocab::from_documents(std::span<const std::vector<std::string>> docs) {
  Vocab v;
  for (const auto& doc : docs)
    for (const auto& tok : doc) v.add(tok);
  return v;
}

std::optional<TokenId> Vocab::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocab::id(std::string_view token) const { return find(token).value_or(kUnknownToken); }

TokenId Vocab::add(std::string token) {
  if (auto it = index_.find(token); it != index_.end()) return it->second;
  if (token.empty() || has_whitespace(token)) {
    throw InputError(fmt::format("invalid vocabulary token '{}'", token));
  }
  const auto id = static_cast<TokenId>(tokens_.size());
  index_.emplace(token, id);
  tokens_.push_back(std::move(token));
  return id;
}

std::vector<TokenId> Vocab::encode(std::span<const std::string> tokens) const {
  std::vector<TokenId> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

}  // namespace hashee
