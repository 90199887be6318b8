// Copyright 2026 The simulag Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace simulag {

/// Trace content breaks a structural invariant: non-monotone timestamps,
/// a delay sitting on no segment boundary, an empty segment list, a
/// nonpositive duration.
class MalformedTrace : public std::runtime_error {
 public:
  explicit MalformedTrace(const std::string& reason)
      : std::runtime_error("malformed trace: " + reason) {}
};

/// Instance cannot be scored at all (zero reference length, zero source).
class DegenerateInstance : public std::runtime_error {
 public:
  explicit DegenerateInstance(const std::string& reason)
      : std::runtime_error("degenerate instance: " + reason) {}
};

/// A per-token operation was asked for on an empty hypothesis.
class EmptyHypothesis : public std::runtime_error {
 public:
  explicit EmptyHypothesis(const std::string& reason)
      : std::runtime_error("empty hypothesis: " + reason) {}
};

/// Corpus aggregation found no instance with usable metrics.
class NoScorableInstances : public std::runtime_error {
 public:
  explicit NoScorableInstances(const std::string& reason)
      : std::runtime_error("no scorable instances: " + reason) {}
};

/// Read/write policy parameters are inconsistent with the source.
class InvalidPolicy : public std::runtime_error {
 public:
  explicit InvalidPolicy(const std::string& reason)
      : std::runtime_error("invalid policy: " + reason) {}
};

/// Inference cost model is unusable (negative cost, short cost list).
class InvalidCompute : public std::runtime_error {
 public:
  explicit InvalidCompute(const std::string& reason)
      : std::runtime_error("invalid compute model: " + reason) {}
};

/// A log line could not be decoded. Carries the 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& reason)
      : std::runtime_error("line " + std::to_string(line) + ": " + reason),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A log line decoded fine but its fields disagree with each other
/// (mismatched array lengths, duration sums off the stated source length).
class SchemaError : public std::runtime_error {
 public:
  explicit SchemaError(const std::string& reason)
      : std::runtime_error("schema error: " + reason) {}
};

}  // namespace simulag
