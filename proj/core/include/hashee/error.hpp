// Copyright 2026 The hashee Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace hashee {

// Base for every error raised by the library. Messages name the offending
// input (flag, file, line, or tensor) so callers can surface them verbatim.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid combination of parameters (e.g. more buckets than layers).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Input data is unusable (empty corpus, empty sequence, m > n, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

// A text file does not follow its format.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Gradient descent produced a non-finite loss.
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace hashee
