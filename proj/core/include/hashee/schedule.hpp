// Copyright 2026 The hashee Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hashee/hash_table.hpp"
#include "hashee/vocab.hpp"

namespace hashee {

// Exit layer (1..L) and validity for every position of one sequence.
// A position with exit layer e is updated by layers 1..e and copied upward
// afterwards. Padding positions carry exit layer 1, are never updated, and
// are never attended to.
struct ExitSchedule {
  std::size_t num_layers = 0;
  std::vector<std::size_t> exit_layer;
  std::vector<bool> valid;

  std::size_t size() const noexcept { return exit_layer.size(); }
  std::size_t valid_count() const noexcept;

  // Positions updated by layer `layer` (1-based): valid with exit >= layer.
  std::vector<std::size_t> active_at(std::size_t layer) const;
  std::size_t active_count(std::size_t layer) const;

  std::vector<std::size_t> valid_positions() const;
};

struct ScheduleOptions {
  // Position 0 holds the classification token and always runs all layers.
  bool pin_first = false;
  // Per-position validity; empty means every position is valid.
  std::vector<bool> valid;
};

// Looks each token up in `table`. Throws ConfigError when the table was
// built for a different depth than `num_layers`.
ExitSchedule make_schedule(std::span<const TokenId> tokens, const HashTable& table,
                           std::size_t num_layers, const ScheduleOptions& options = {});

// Every position exits at `layer`.
ExitSchedule uniform_schedule(std::size_t length, std::size_t num_layers, std::size_t layer);

}  // namespace hashee
