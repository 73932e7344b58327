// Copyright 2026 The hashee Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "hashee/schedule.hpp"

namespace hashee {

// Encoder dimensions that determine per-layer cost.
struct LayerDims {
  std::uint64_t hidden = 768;   // d
  std::uint64_t heads = 12;     // h
  std::uint64_t ffn_hidden = 3072;  // d_ff

  friend bool operator==(const LayerDims&, const LayerDims&) = default;
};

// MACs an exit-aware layer skips relative to the same layer with m == n.
struct SavedMacs {
  std::uint64_t linear_proj = 0;  // (n-m) d^2, query projection only
  std::uint64_t attention = 0;    // 2 n (n-m) (h + d)
  std::uint64_t out_proj = 0;     // (n-m) d^2
  std::uint64_t layer_norms = 0;  // 2 (n-m) d, twice
  std::uint64_t ffn = 0;          // 2 (n-m) d d_ff

  std::uint64_t total() const noexcept {
    return linear_proj + attention + out_proj + layer_norms + ffn;
  }
  friend bool operator==(const SavedMacs&, const SavedMacs&) = default;
};

struct LayerCost {
  std::uint64_t n = 0;
  std::uint64_t m = 0;
  LayerDims dims;
  SavedMacs saved;
  std::uint64_t full_macs = 0;

  std::uint64_t executed_macs() const noexcept { return full_macs - saved.total(); }
};

// MACs of one vanilla encoder layer over n tokens: 4nd^2 for the four
// projections, 2n^2(h+d) for attention, 4nd for the two layer norms and
// 2nd*d_ff for the FFN. Multiplications by the 1/sqrt(d_k) scale and by
// the softmax reciprocal count once per score each; layer-norm statistics
// are reductions and count zero.
std::uint64_t full_layer_macs(std::uint64_t n, const LayerDims& dims);

// Per-category saved MACs for an exit-aware layer with m of n tokens
// active. When m == 0 the layer is skipped outright, so the key and value
// projections are saved as well and saved == full. Throws InputError for
// m > n, ConfigError when heads do not divide hidden.
LayerCost saved_macs(std::uint64_t n, std::uint64_t m, const LayerDims& dims);

inline constexpr std::uint64_t flops_from_macs(std::uint64_t macs) noexcept { return 2 * macs; }

struct LayerTotals {
  std::uint64_t n_sum = 0;
  std::uint64_t m_sum = 0;
  std::uint64_t saved_macs = 0;
  std::uint64_t full_macs = 0;

  friend bool operator==(const LayerTotals&, const LayerTotals&) = default;
};

// Encoder-layer cost of running a corpus through an exit-aware model,
// against a baseline model that runs every token through every layer.
// Embedding lookups and classifier heads are excluded from both sides.
struct FlopsReport {
  LayerDims dims;
  std::size_t num_layers = 0;
  LayerDims baseline_dims;
  std::size_t baseline_layers = 0;

  std::uint64_t sequences = 0;
  std::vector<LayerTotals> per_layer;          // index l-1 for layer l
  std::vector<std::uint64_t> exit_histogram;   // index l-1: valid tokens exiting at layer l
  std::uint64_t model_macs = 0;
  std::uint64_t baseline_macs = 0;

  std::uint64_t model_flops() const noexcept { return flops_from_macs(model_macs); }
  std::uint64_t baseline_flops() const noexcept { return flops_from_macs(baseline_macs); }
  // baseline FLOPs / model FLOPs; 0 when the model did no work.
  double speedup() const noexcept;

  // Adds another shard's totals; both must share dims and depths.
  FlopsReport& operator+=(const FlopsReport& other);

  friend bool operator==(const FlopsReport&, const FlopsReport&) = default;
};

FlopsReport empty_report(const LayerDims& dims, std::size_t num_layers,
                         const LayerDims& baseline_dims, std::size_t baseline_layers);

// Throws InputError for an empty schedule list.
FlopsReport flops_report(const LayerDims& dims, std::size_t num_layers,
                         std::span<const ExitSchedule> schedules, const LayerDims& baseline_dims,
                         std::size_t baseline_layers);

void write_report_text(std::ostream& out, const FlopsReport& report);
// Columns: layer,n_sum,m_sum,saved_macs,full_macs.
void write_report_csv(std::ostream& out, const FlopsReport& report);

}  // namespace hashee
