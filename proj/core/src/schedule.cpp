// Copyright 2026 The hashee Authors
// SPDX-License-Identifier: Apache-2.0

#include "hashee/schedule.hpp"

#include <algorithm>

#include <fmt/core.h>

#include "hashee/error.hpp"

namespace hashee {

std::size_t ExitSchedule::valid_count() const noexcept {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), true));
}

std::vector<std::size_t> ExitSchedule::active_at(std::size_t layer) const {
  std::vector<std::size_t> active;
  for (std::size_t p = 0; p < exit_layer.size(); ++p)
    if (valid[p] && exit_layer[p] >= layer) active.push_back(p);
  return active;
}

std::size_t ExitSchedule::active_count(std::size_t layer) const {
  std::size_t m = 0;
  for (std::size_t p = 0; p < exit_layer.size(); ++p)
    if (valid[p] && exit_layer[p] >= layer) ++m;
  return m;
}

std::vector<std::size_t> ExitSchedule::valid_positions() const {
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < valid.size(); ++p)
    if (valid[p]) out.push_back(p);
  return out;
}

ExitSchedule make_schedule(std::span<const TokenId> tokens, const HashTable& table,
                           std::size_t num_layers, const ScheduleOptions& options) {
  if (table.num_layers() != num_layers) {
    throw ConfigError(fmt::format("hash table targets {} layers but the model has {}",
                                  table.num_layers(), num_layers));
  }
  if (!options.valid.empty() && options.valid.size() != tokens.size()) {
    throw InputError(fmt::format("mask length {} differs from sequence length {}",
                                 options.valid.size(), tokens.size()));
  }
  ExitSchedule s;
  s.num_layers = num_layers;
  s.exit_layer.resize(tokens.size());
  s.valid = options.valid.empty() ? std::vector<bool>(tokens.size(), true) : options.valid;
  for (std::size_t p = 0; p < tokens.size(); ++p) {
    if (!s.valid[p]) {
      s.exit_layer[p] = 1;
    } else if (p == 0 && options.pin_first) {
      s.exit_layer[p] = num_layers;
    } else {
      s.exit_layer[p] = table.layer_of(tokens[p]);
    }
  }
  return s;
}

ExitSchedule uniform_schedule(std::size_t length, std::size_t num_layers, std::size_t layer) {
  if (layer < 1 || layer > num_layers) {
    throw ConfigError(fmt::format("exit layer {} outside 1..{}", layer, num_layers));
  }
  ExitSchedule s;
  s.num_layers = num_layers;
  s.exit_layer.assign(length, layer);
  s.valid.assign(length, true);
  return s;
}

}  // namespace hashee
