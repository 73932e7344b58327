// Copyright 2026 The hashee Authors
// SPDX-License-Identifier: Apache-2.0

#include "hashee/flops.hpp"

#include <ostream>

#include <fmt/core.h>

#include "hashee/error.hpp"

namespace hashee {
namespace {

void check_dims(const LayerDims& dims) {
  if (dims.hidden == 0 || dims.heads == 0 || dims.ffn_hidden == 0) {
    throw ConfigError("layer dimensions must be positive");
  }
  if (dims.hidden % dims.heads != 0) {
    throw ConfigError(fmt::format("heads ({}) must divide hidden size ({})", dims.heads,
                                  dims.hidden));
  }
}

}  // namespace

std::uint64_t full_layer_macs(std::uint64_t n, const LayerDims& dims) {
  check_dims(dims);
  const auto d = dims.hidden, h = dims.heads, f = dims.ffn_hidden;
  return 4 * n * d * d + 2 * n * n * (h + d) + 4 * n * d + 2 * n * d * f;
}

LayerCost saved_macs(std::uint64_t n, std::uint64_t m, const LayerDims& dims) {
  check_dims(dims);
  if (m > n) throw InputError(fmt::format("active count {} exceeds sequence length {}", m, n));
  const auto d = dims.hidden, h = dims.heads, f = dims.ffn_hidden;
  const auto gone = n - m;
  LayerCost cost;
  cost.n = n;
  cost.m = m;
  cost.dims = dims;
  cost.full_macs = full_layer_macs(n, dims);
  cost.saved.linear_proj = gone * d * d;
  cost.saved.attention = 2 * n * gone * (h + d);
  cost.saved.out_proj = gone * d * d;
  cost.saved.layer_norms = 2 * (2 * gone * d);
  cost.saved.ffn = 2 * gone * d * f;
  // A layer with no remaining queries is skipped, keys and values included.
  if (m == 0) cost.saved.linear_proj += 2 * n * d * d;
  return cost;
}

double FlopsReport::speedup() const noexcept {
  if (model_macs == 0) return 0.0;
  return static_cast<double>(baseline_flops()) / static_cast<double>(model_flops());
}

FlopsReport& FlopsReport::operator+=(const FlopsReport& other) {
  if (dims != other.dims || num_layers != other.num_layers ||
      baseline_dims != other.baseline_dims || baseline_layers != other.baseline_layers) {
    throw ConfigError("cannot merge FLOPs reports with different model shapes");
  }
  sequences += other.sequences;
  for (std::size_t l = 0; l < per_layer.size(); ++l) {
    per_layer[l].n_sum += other.per_layer[l].n_sum;
    per_layer[l].m_sum += other.per_layer[l].m_sum;
    per_layer[l].saved_macs += other.per_layer[l].saved_macs;
    per_layer[l].full_macs += other.per_layer[l].full_macs;
    exit_histogram[l] += other.exit_histogram[l];
  }
  model_macs += other.model_macs;
  baseline_macs += other.baseline_macs;
  return *this;
}

FlopsReport empty_report(const LayerDims& dims, std::size_t num_layers,
                         const LayerDims& baseline_dims, std::size_t baseline_layers) {
  check_dims(dims);
  check_dims(baseline_dims);
  if (num_layers == 0 || baseline_layers == 0) throw ConfigError("layer counts must be positive");
  FlopsReport r;
  r.dims = dims;
  r.num_layers = num_layers;
  r.baseline_dims = baseline_dims;
  r.baseline_layers = baseline_layers;
  r.per_layer.resize(num_layers);
  r.exit_histogram.assign(num_layers, 0);
  return r;
}

FlopsReport flops_report(const LayerDims& dims, std::size_t num_layers,
                         std::span<const ExitSchedule> schedules, const LayerDims& baseline_dims,
                         std::size_t baseline_layers) {
  if (schedules.empty()) throw InputError("FLOPs report needs at least one sequence");
  FlopsReport report = empty_report(dims, num_layers, baseline_dims, baseline_layers);
  for (const auto& s : schedules) {
    if (s.num_layers != num_layers) {
      throw ConfigError(fmt::format("schedule targets {} layers, report expects {}", s.num_layers,
                                    num_layers));
    }
    const std::uint64_t n = s.valid_count();
    ++report.sequences;
    for (std::size_t l = 1; l <= num_layers; ++l) {
      const LayerCost cost = saved_macs(n, s.active_count(l), dims);
      auto& row = report.per_layer[l - 1];
      row.n_sum += n;
      row.m_sum += cost.m;
      row.saved_macs += cost.saved.total();
      row.full_macs += cost.full_macs;
      report.model_macs += cost.executed_macs();
    }
    report.baseline_macs += baseline_layers * full_layer_macs(n, baseline_dims);
    for (std::size_t p = 0; p < s.size(); ++p)
      if (s.valid[p]) ++report.exit_histogram[s.exit_layer[p] - 1];
  }
  return report;
}

void write_report_text(std::ostream& out, const FlopsReport& r) {
  out << "# encoder-layer FLOPs; embedding lookups and classifier heads excluded\n";
  out << fmt::format("# model: L={} d={} h={} d_ff={}; baseline: L={} d={} h={} d_ff={}\n",
                     r.num_layers, r.dims.hidden, r.dims.heads, r.dims.ffn_hidden,
                     r.baseline_layers, r.baseline_dims.hidden, r.baseline_dims.heads,
                     r.baseline_dims.ffn_hidden);
  out << fmt::format("{:>5} {:>12} {:>12} {:>18} {:>18} {:>12}\n", "layer", "n_sum", "m_sum",
                     "saved_macs", "full_macs", "exits");
  for (std::size_t l = 0; l < r.per_layer.size(); ++l) {
    const auto& row = r.per_layer[l];
    out << fmt::format("{:>5} {:>12} {:>12} {:>18} {:>18} {:>12}\n", l + 1, row.n_sum, row.m_sum,
                       row.saved_macs, row.full_macs, r.exit_histogram[l]);
  }
  out << fmt::format("sequences      {}\n", r.sequences);
  out << fmt::format("model FLOPs    {}\n", r.model_flops());
  out << fmt::format("baseline FLOPs {}\n", r.baseline_flops());
  out << fmt::format("speedup        {:.4f}x\n", r.speedup());
}

void write_report_csv(std::ostream& out, const FlopsReport& r) {
  out << "layer,n_sum,m_sum,saved_macs,full_macs\n";
  for (std::size_t l = 0; l < r.per_layer.size(); ++l) {
    const auto& row = r.per_layer[l];
    out << (l + 1) << ',' << row.n_sum << ',' << row.m_sum << ',' << row.saved_macs << ','
        << row.full_macs << '\n';
  }
}

}  // namespace hashee
