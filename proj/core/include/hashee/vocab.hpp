// Copyright 2026 The hashee Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace hashee {

using TokenId = std::uint32_t;

// Id used for tokens that are not in a vocabulary.
inline constexpr TokenId kUnknownToken = std::numeric_limits<TokenId>::max();

// Ordered set of distinct token strings with dense ids 0..V-1.
class Vocab {
 public:
  Vocab() = default;
  // Throws InputError on duplicates or tokens that contain whitespace.
  explicit Vocab(std::vector<std::string> tokens);

  // Vocabulary over all tokens of `docs`, ids in first-appearance order.
  static Vocab from_documents(std::span<const std::vector<std::string>> docs);

  std::size_t size() const noexcept { return tokens_.size(); }
  bool empty() const noexcept { return tokens_.empty(); }

  const std::string& token(TokenId id) const { return tokens_.at(id); }
  std::span<const std::string> tokens() const noexcept { return tokens_; }

  std::optional<TokenId> find(std::string_view token) const;
  // kUnknownToken when absent.
  TokenId id(std::string_view token) const;

  // Adds the token if missing; returns its id.
  TokenId add(std::string token);

  std::vector<TokenId> encode(std::span<const std::string> tokens) const;

  friend bool operator==(const Vocab& a, const Vocab& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

}  // namespace hashee
