// Copyright 2026 The hashee Authors
// SPDX-License-Identifier: Apache-2.0

#include "hashee/encoder.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <fmt/core.h>

#include "hashee/error.hpp"
#include "hashee/random.hpp"

namespace hashee {
namespace {

void fill_normal(Matrix& m, Rng& rng, double stddev) {
  for (double& v : m.data()) v = rng.normal(0.0, stddev);
}

void expect_shape(const Matrix& m, std::size_t rows, std::size_t cols, const std::string& name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ShapeError(fmt::format("tensor {} is {}x{}, expected {}x{}", name, m.rows(), m.cols(),
                                 rows, cols));
  }
}

void expect_length(std::span<const double> v, std::size_t n, const std::string& name) {
  if (v.size() != n) {
    throw ShapeError(fmt::format("tensor {} has length {}, expected {}", name, v.size(), n));
  }
}

Matrix as_row(std::span<const double> v) {
  return Matrix(1, v.size(), std::vector<double>(v.begin(), v.end()));
}

void write_tensor(std::ostream& out, const std::string& name, const Matrix& m) {
  out << "[tensor " << name << ' ' << m.rows() << ' ' << m.cols() << "]\n";
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ' ';
      // 17 significant digits round-trip every double exactly.
      out << fmt::format("{:.17g}", row[c]);
    }
    out << '\n';
  }
}

std::size_t header_value(const std::string& field, const std::string& key,
                         const std::string& source) {
  const std::string prefix = key + "=";
  if (field.rfind(prefix, 0) != 0) {
    throw ParseError(source, 1, fmt::format("expected {}=<count>, got '{}'", key, field));
  }
  try {
    std::size_t used = 0;
    const auto value = std::stoull(field.substr(prefix.size()), &used);
    if (used != field.size() - prefix.size()) throw std::invalid_argument(field);
    return static_cast<std::size_t>(value);
  } catch (const std::logic_error&) {
    throw ParseError(source, 1, fmt::format("malformed {} value", key));
  }
}

}  // namespace

void ModelConfig::validate() const {
  if (num_layers == 0) throw ConfigError("model needs at least one layer");
  if (hidden == 0 || heads == 0 || ffn_hidden == 0) {
    throw ConfigError("hidden size, heads, and FFN size must be positive");
  }
  if (hidden % heads != 0) {
    throw ConfigError(fmt::format("hidden size {} is not divisible by {} heads", hidden, heads));
  }
  if (vocab_size == 0) throw ConfigError("model vocabulary size must be positive");
  if (max_length == 0) throw ConfigError("max length must be positive");
}

EncoderModel::EncoderModel(const ModelConfig& config) : config_(config) {
  config_.validate();
  const std::size_t d = config_.hidden;
  embedding_ = Matrix(config_.vocab_size, d);
  layers_.resize(config_.num_layers);
  for (auto& layer : layers_) {
    layer.wq = layer.wk = layer.wv = layer.wo = Matrix(d, d);
    layer.w1 = Matrix(d, config_.ffn_hidden);
    layer.w2 = Matrix(config_.ffn_hidden, d);
    layer.ln1_gain.assign(d, 1.0);
    layer.ln1_bias.assign(d, 0.0);
    layer.ln2_gain.assign(d, 1.0);
    layer.ln2_bias.assign(d, 0.0);
  }
  if (config_.num_classes > 0) {
    head_ = ClassifierHead{Matrix(d, config_.num_classes),
                           std::vector<double>(config_.num_classes, 0.0)};
  }
}

EncoderModel EncoderModel::random(const ModelConfig& config, std::uint64_t seed) {
  EncoderModel model(config);
  Rng rng(seed);
  const double d = static_cast<double>(config.hidden);
  fill_normal(model.embedding_, rng, 1.0);
  for (auto& layer : model.layers_) {
    fill_normal(layer.wq, rng, 1.0 / std::sqrt(d));
    fill_normal(layer.wk, rng, 1.0 / std::sqrt(d));
    fill_normal(layer.wv, rng, 1.0 / std::sqrt(d));
    fill_normal(layer.wo, rng, 1.0 / std::sqrt(d));
    fill_normal(layer.w1, rng, 1.0 / std::sqrt(d));
    fill_normal(layer.w2, rng, 1.0 / std::sqrt(static_cast<double>(config.ffn_hidden)));
  }
  return model;
}

const ClassifierHead& EncoderModel::head() const {
  if (!head_) throw ConfigError("model has no classifier head");
  return *head_;
}

ClassifierHead& EncoderModel::head() {
  if (!head_) throw ConfigError("model has no classifier head");
  return *head_;
}

void EncoderModel::set_head(ClassifierHead head) {
  expect_shape(head.weight, config_.hidden, head.weight.cols(), "head.weight");
  expect_length(head.bias, head.weight.cols(), "head.bias");
  config_.num_classes = head.weight.cols();
  head_ = std::move(head);
}

Matrix sinusoidal_positions(std::size_t length, std::size_t hidden) {
  Matrix pe(length, hidden);
  for (std::size_t pos = 0; pos < length; ++pos) {
    for (std::size_t i = 0; i < hidden; i += 2) {
      const double angle = static_cast<double>(pos) /
                           std::pow(10000.0, static_cast<double>(i) / static_cast<double>(hidden));
      pe(pos, i) = std::sin(angle);
      if (i + 1 < hidden) pe(pos, i + 1) = std::cos(angle);
    }
  }
  return pe;
}

Matrix EncoderModel::embed(std::span<const TokenId> tokens) const {
  if (tokens.empty()) throw InputError("cannot run the encoder on an empty sequence");
  if (tokens.size() > config_.max_length) {
    throw InputError(fmt::format("sequence length {} exceeds max length {}", tokens.size(),
                                 config_.max_length));
  }
  Matrix h = sinusoidal_positions(tokens.size(), config_.hidden);
  for (std::size_t p = 0; p < tokens.size(); ++p) {
    if (tokens[p] >= embedding_.rows()) continue;
    auto dst = h.row(p);
    const auto src = embedding_.row(tokens[p]);
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
  }
  return h;
}

void EncoderModel::validate() const {
  config_.validate();
  const std::size_t d = config_.hidden, f = config_.ffn_hidden;
  expect_shape(embedding_, config_.vocab_size, d, "embedding");
  if (layers_.size() != config_.num_layers) {
    throw ShapeError(fmt::format("model has {} layers, config says {}", layers_.size(),
                                 config_.num_layers));
  }
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    const std::string p = fmt::format("layer.{}.", i);
    expect_shape(l.wq, d, d, p + "wq");
    expect_shape(l.wk, d, d, p + "wk");
    expect_shape(l.wv, d, d, p + "wv");
    expect_shape(l.wo, d, d, p + "wo");
    expect_shape(l.w1, d, f, p + "w1");
    expect_shape(l.w2, f, d, p + "w2");
    expect_length(l.ln1_gain, d, p + "ln1.gain");
    expect_length(l.ln1_bias, d, p + "ln1.bias");
    expect_length(l.ln2_gain, d, p + "ln2.gain");
    expect_length(l.ln2_bias, d, p + "ln2.bias");
  }
  if (head_) {
    expect_shape(head_->weight, d, config_.num_classes, "head.weight");
    expect_length(head_->bias, config_.num_classes, "head.bias");
  }
}

void EncoderModel::write(std::ostream& out) const {
  out << "#hashee-model v1 L=" << config_.num_layers << " d=" << config_.hidden
      << " h=" << config_.heads << " d_ff=" << config_.ffn_hidden << " V=" << config_.vocab_size
      << '\n';
  write_tensor(out, "embedding", embedding_);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    const std::string p = fmt::format("layer.{}.", i);
    write_tensor(out, p + "wq", l.wq);
    write_tensor(out, p + "wk", l.wk);
    write_tensor(out, p + "wv", l.wv);
    write_tensor(out, p + "wo", l.wo);
    write_tensor(out, p + "w1", l.w1);
    write_tensor(out, p + "w2", l.w2);
    write_tensor(out, p + "ln1.gain", as_row(l.ln1_gain));
    write_tensor(out, p + "ln1.bias", as_row(l.ln1_bias));
    write_tensor(out, p + "ln2.gain", as_row(l.ln2_gain));
    write_tensor(out, p + "ln2.bias", as_row(l.ln2_bias));
  }
  if (head_) {
    write_tensor(out, "head.weight", head_->weight);
    write_tensor(out, "head.bias", as_row(head_->bias));
  }
}

EncoderModel EncoderModel::parse(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source, 1, "missing model header");
  std::istringstream header(line);
  std::string magic, version, fl, fd, fh, fff, fv, extra;
  header >> magic >> version >> fl >> fd >> fh >> fff >> fv;
  if (magic != "#hashee-model" || version != "v1" || (header >> extra)) {
    throw ParseError(source, 1, "expected '#hashee-model v1 L=.. d=.. h=.. d_ff=.. V=..'");
  }
  ModelConfig config;
  config.num_layers = header_value(fl, "L", source);
  config.hidden = header_value(fd, "d", source);
  config.heads = header_value(fh, "h", source);
  config.ffn_hidden = header_value(fff, "d_ff", source);
  config.vocab_size = header_value(fv, "V", source);
  try {
    config.validate();
  } catch (const ConfigError& e) {
    throw ParseError(source, 1, e.what());
  }

  std::map<std::string, Matrix> tensors;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string open, name, tail;
    std::size_t rows = 0, cols = 0;
    if (!(ss >> open >> name >> rows >> tail) || open != "[tensor" || tail.empty() ||
        tail.back() != ']') {
      throw ParseError(source, lineno, "expected '[tensor <name> <rows> <cols>]'");
    }
    tail.pop_back();
    try {
      cols = std::stoul(tail);
    } catch (const std::logic_error&) {
      throw ParseError(source, lineno, "malformed column count");
    }
    if (tensors.contains(name)) throw ParseError(source, lineno, "duplicate tensor " + name);
    std::vector<double> data;
    data.reserve(rows * cols);
    for (std::size_t r = 0; r < rows; ++r) {
      if (!std::getline(in, line)) throw ParseError(source, lineno, "truncated tensor " + name);
      ++lineno;
      std::istringstream row(line);
      for (std::size_t c = 0; c < cols; ++c) {
        double v;
        if (!(row >> v) || !std::isfinite(v)) {
          throw ParseError(source, lineno, fmt::format("tensor {} row {} needs {} finite reals",
                                                       name, r, cols));
        }
        data.push_back(v);
      }
      std::string more;
      if (row >> more) throw ParseError(source, lineno, "extra values in tensor " + name);
    }
    tensors.emplace(name, Matrix(rows, cols, std::move(data)));
  }

  auto take = [&](const std::string& name) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw ParseError(source, lineno, "missing tensor " + name);
    Matrix m = std::move(it->second);
    tensors.erase(it);
    return m;
  };
  auto take_vector = [&](const std::string& name) {
    const Matrix m = take(name);
    if (m.rows() != 1) throw ShapeError(fmt::format("tensor {} must have one row", name));
    return std::vector<double>(m.data().begin(), m.data().end());
  };

  EncoderModel model;
  model.config_ = config;
  model.embedding_ = take("embedding");
  model.layers_.resize(config.num_layers);
  for (std::size_t i = 0; i < config.num_layers; ++i) {
    auto& l = model.layers_[i];
    const std::string p = fmt::format("layer.{}.", i);
    l.wq = take(p + "wq");
    l.wk = take(p + "wk");
    l.wv = take(p + "wv");
    l.wo = take(p + "wo");
    l.w1 = take(p + "w1");
    l.w2 = take(p + "w2");
    l.ln1_gain = take_vector(p + "ln1.gain");
    l.ln1_bias = take_vector(p + "ln1.bias");
    l.ln2_gain = take_vector(p + "ln2.gain");
    l.ln2_bias = take_vector(p + "ln2.bias");
  }
  if (tensors.contains("head.weight")) {
    ClassifierHead head{take("head.weight"), take_vector("head.bias")};
    model.config_.num_classes = head.weight.cols();
    model.head_ = std::move(head);
  }
  if (!tensors.empty()) {
    throw ParseError(source, lineno, "unexpected tensor " + tensors.begin()->first);
  }
  model.validate();
  return model;
}

void EncoderModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(fmt::format("cannot write model '{}'", path.string()));
  write(out);
}

EncoderModel EncoderModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(fmt::format("cannot open model '{}'", path.string()));
  return parse(in, path.string());
}

}  // namespace hashee
