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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "simulag/errors.hpp"
#include "simulag/trace.hpp"

namespace simulag {

enum class PolicyKind { WaitKStrideN };

/// wait-k stride-n read/write policy: read k segments, then emit n tokens
/// after that segment and after every further one; `tail_tokens` more are
/// emitted once the source is exhausted (attributed to the final segment).
struct PolicySpec {
  PolicyKind kind = PolicyKind::WaitKStrideN;
  int k = 1;
  int n = 1;
  int tail_tokens = 0;
};

enum class ComputeKind { Constant, PerToken, SeededUniform };

/// SplitMix64 (Steele, Lea & Flood 2014). Fixed algorithm, no platform
/// dependence: state += 0x9E3779B97F4A7C15, then two xor-multiply mixing
/// rounds with 0xBF58476D1CE4E5B9 and 0x94D049BB133111EB. Seed 0 yields
/// 0xE220A8397B1DCDAF first. Recorded draws therefore reproduce anywhere.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) built from the top 53 bits of next().
  double next_unit() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [lo, hi).
  double next_in(double lo, double hi) {
    return lo + next_unit() * (hi - lo);
  }

 private:
  std::uint64_t state_;
};

/// Per-token inference cost model.
struct ComputeModel {
  ComputeKind kind = ComputeKind::Constant;
  double constant_ms = 0.0;
  std::vector<double> per_token_ms;
  double lo_ms = 0.0;
  double hi_ms = 0.0;
  std::uint64_t seed = 0;

  static ComputeModel constant(double ms) {
    ComputeModel m;
    m.kind = ComputeKind::Constant;
    m.constant_ms = ms;
    return m;
  }

  static ComputeModel per_token(std::vector<double> ms) {
    ComputeModel m;
    m.kind = ComputeKind::PerToken;
    m.per_token_ms = std::move(ms);
    return m;
  }

  static ComputeModel seeded_uniform(double lo, double hi,
                                     std::uint64_t seed) {
    ComputeModel m;
    m.kind = ComputeKind::SeededUniform;
    m.lo_ms = lo;
    m.hi_ms = hi;
    m.seed = seed;
    return m;
  }
};

/// A synthetic trace plus the ground-truth wall-clock time each token became
/// available, measured from speech start. The trace records what a
/// SimulEval-style log would contain; emission_wall_ms is what a stopwatch
/// next to the live service would have seen.
struct SimulationOutcome {
  Trace trace;
  std::vector<double> emission_wall_ms;
};

namespace detail {

inline void check_compute(const ComputeModel& compute, int token_count) {
  switch (compute.kind) {
    case ComputeKind::Constant:
      if (!std::isfinite(compute.constant_ms) || compute.constant_ms < 0.0)
        throw InvalidCompute("constant cost must be finite and >= 0");
      break;
    case ComputeKind::PerToken:
      if (static_cast<int>(compute.per_token_ms.size()) < token_count)
        throw InvalidCompute("per-token cost list shorter than the " +
                             std::to_string(token_count) +
                             " tokens to emit");
      for (double c : compute.per_token_ms)
        if (!std::isfinite(c) || c < 0.0)
          throw InvalidCompute("per-token costs must be finite and >= 0");
      break;
    case ComputeKind::SeededUniform:
      if (!std::isfinite(compute.lo_ms) || !std::isfinite(compute.hi_ms) ||
          compute.lo_ms < 0.0 || compute.hi_ms < compute.lo_ms)
        throw InvalidCompute("uniform range must satisfy 0 <= lo <= hi");
      break;
  }
}

}  // namespace detail

/// Discrete-event simulation of the read/write loop in logical time.
/// Speech arrives on its own clock (segment j is available at the j-th
/// prefix sum of durations); a single non-preemptive worker generates the
/// policy's blocks in order, each starting at max(segment arrival, previous
/// block's finish) and emitting its tokens sequentially at their inference
/// cost. The trace records per-token CU delay (block arrival time) and
/// cumulative computation; emission_wall_ms records true availability.
/// Deterministic given the compute seed.
inline SimulationOutcome simulate(
    const std::vector<double>& segment_durations_ms, const PolicySpec& policy,
    const ComputeModel& compute) {
  const int num_segments = static_cast<int>(segment_durations_ms.size());
  if (policy.k < 1 || policy.n < 1 || policy.tail_tokens < 0)
    throw InvalidPolicy("need k >= 1, n >= 1, tail_tokens >= 0");
  if (policy.k > num_segments)
    throw InvalidPolicy("k = " + std::to_string(policy.k) + " exceeds the " +
                        std::to_string(num_segments) + " source segments");
  for (double d : segment_durations_ms)
    if (!std::isfinite(d) || d <= 0.0)
      throw MalformedTrace("segment durations must be positive");

  const int token_count =
      (num_segments - policy.k + 1) * policy.n + policy.tail_tokens;
  detail::check_compute(compute, token_count);

  SplitMix64 rng(compute.seed);
  const auto cost_of = [&](int i) {
    switch (compute.kind) {
      case ComputeKind::Constant: return compute.constant_ms;
      case ComputeKind::PerToken:
        return compute.per_token_ms[static_cast<std::size_t>(i)];
      case ComputeKind::SeededUniform:
        return rng.next_in(compute.lo_ms, compute.hi_ms);
    }
    return 0.0;
  };

  SimulationOutcome outcome;
  Trace& trace = outcome.trace;
  trace.segments.reserve(static_cast<std::size_t>(num_segments));
  for (double d : segment_durations_ms) trace.segments.push_back({d});
  trace.tokens.reserve(static_cast<std::size_t>(token_count));
  outcome.emission_wall_ms.reserve(static_cast<std::size_t>(token_count));

  const std::vector<double> arrivals = arrival_times(trace);
  double worker_free_at = 0.0;
  double computation_total = 0.0;
  int emitted = 0;
  for (int j = policy.k; j <= num_segments; ++j) {
    const int burst =
        policy.n + (j == num_segments ? policy.tail_tokens : 0);
    const double available = arrivals[static_cast<std::size_t>(j) - 1];
    double clock = std::max(available, worker_free_at);
    for (int t = 0; t < burst; ++t) {
      const double cost = cost_of(emitted);
      clock += cost;
      computation_total += cost;
      TokenEvent token;
      token.index = ++emitted;
      token.cu_delay_ms = available;
      token.computation_ts_ms = computation_total;
      trace.tokens.push_back(std::move(token));
      outcome.emission_wall_ms.push_back(clock);
    }
    worker_free_at = clock;
  }

  trace.reference_length = std::max(1, token_count);
  validate_trace(trace);
  return outcome;
}

/// Replays the event schedule recorded in a trace and returns each token's
/// true wall-clock availability. Uses only the max(arrival, busy) recursion
/// over blocks; it never touches the buffer/inference delay formulas, so it
/// serves as an independent reference for them.
inline std::vector<double> wall_clock_oracle(const Trace& trace) {
  const std::vector<double> arrivals = arrival_times(trace);
  const std::vector<int> blocks = token_blocks(trace);

  std::vector<double> emission;
  emission.reserve(trace.tokens.size());
  double worker_free_at = 0.0;
  double computation_done = 0.0;  // C at the last finished block boundary
  std::size_t i = 0;
  while (i < trace.tokens.size()) {
    const int j = blocks[i];
    const double start =
        std::max(arrivals[static_cast<std::size_t>(j) - 1], worker_free_at);
    double finish = start;
    while (i < trace.tokens.size() && blocks[i] == j) {
      finish = start + (trace.tokens[i].computation_ts_ms - computation_done);
      emission.push_back(finish);
      ++i;
    }
    worker_free_at = finish;
    computation_done = trace.tokens[i - 1].computation_ts_ms;
  }
  return emission;
}

/// Tiles a validated trace `repeats` times back to back: segments repeat,
/// tokens repeat with CU delays shifted by the source total and computation
/// timestamps shifted by the last computation timestamp, and the reference
/// length scales. repeats == 1 returns the trace unchanged.
inline Trace concat_scale(const Trace& base, int repeats) {
  if (repeats < 1) throw InvalidPolicy("repeats must be >= 1");
  if (repeats == 1) return base;

  const double total = base.total_source_ms();
  const double computation_last =
      base.tokens.empty() ? 0.0 : base.tokens.back().computation_ts_ms;
  const int base_tokens = static_cast<int>(base.tokens.size());

  Trace out;
  out.id = base.id;
  out.reference_length = base.reference_length * repeats;
  out.segments.reserve(base.segments.size() * static_cast<std::size_t>(repeats));
  out.tokens.reserve(base.tokens.size() * static_cast<std::size_t>(repeats));
  for (int r = 0; r < repeats; ++r) {
    for (const SourceSegment& s : base.segments) out.segments.push_back(s);
    for (const TokenEvent& t : base.tokens) {
      TokenEvent shifted = t;
      shifted.index = r * base_tokens + t.index;
      shifted.cu_delay_ms = t.cu_delay_ms + r * total;
      shifted.computation_ts_ms = t.computation_ts_ms + r * computation_last;
      out.tokens.push_back(std::move(shifted));
    }
  }
  return out;
}

}  // namespace simulag
