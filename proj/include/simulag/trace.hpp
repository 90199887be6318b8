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
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "simulag/errors.hpp"

namespace simulag {

// All times are milliseconds from the start of the source speech, stored as
// doubles. Logs round to 3 decimal places, so anything closer than half a
// millisecond to a segment boundary counts as sitting on it.
inline constexpr double kBoundaryToleranceMs = 0.5;

/// One source speech segment of positive duration.
struct SourceSegment {
  double duration_ms = 0.0;
};

/// One emitted target token. `cu_delay_ms` is the source audio consumed when
/// the token was committed (always a segment boundary); `computation_ts_ms`
/// is the cumulative pure computation time the generator has spent up to and
/// including this token, with waiting excluded.
struct TokenEvent {
  int index = 0;  // 1-based position in the hypothesis
  std::optional<std::string> text;
  double cu_delay_ms = 0.0;
  double computation_ts_ms = 0.0;
};

/// One evaluation instance: source segments, emitted tokens and the
/// reference translation length. Immutable by convention once validated.
struct Trace {
  std::string id;
  std::vector<SourceSegment> segments;
  std::vector<TokenEvent> tokens;
  int reference_length = 1;

  double total_source_ms() const {
    double total = 0.0;
    for (const SourceSegment& s : segments) total += s.duration_ms;
    return total;
  }
};

/// Cumulative segment end times: arrival_times(t)[j-1] is when segment j has
/// fully arrived, measured from speech start.
inline std::vector<double> arrival_times(const Trace& trace) {
  std::vector<double> arrivals;
  arrivals.reserve(trace.segments.size());
  double acc = 0.0;
  for (const SourceSegment& s : trace.segments) {
    acc += s.duration_ms;
    arrivals.push_back(acc);
  }
  return arrivals;
}

/// Maps every token to the 1-based index of the segment whose arrival time
/// matches its CU delay within kBoundaryToleranceMs. A token's block is the
/// segment that was the latest fully-read one when the token was committed.
/// Throws MalformedTrace when some delay sits on no boundary.
inline std::vector<int> token_blocks(const Trace& trace) {
  const std::vector<double> arrivals = arrival_times(trace);
  if (arrivals.empty() && !trace.tokens.empty())
    throw MalformedTrace("tokens without source segments");

  std::vector<int> blocks;
  blocks.reserve(trace.tokens.size());
  std::size_t j = 0;  // CU delays are nondecreasing, so one forward scan
  for (const TokenEvent& token : trace.tokens) {
    const double cu = token.cu_delay_ms;
    while (j + 1 < arrivals.size() && arrivals[j] < cu - kBoundaryToleranceMs)
      ++j;
    std::size_t best = j;
    if (j + 1 < arrivals.size() &&
        std::fabs(arrivals[j + 1] - cu) < std::fabs(arrivals[j] - cu))
      best = j + 1;
    if (std::fabs(arrivals[best] - cu) > kBoundaryToleranceMs)
      throw MalformedTrace("token " + std::to_string(token.index) +
                           " delay " + std::to_string(cu) +
                           " ms matches no segment boundary");
    blocks.push_back(static_cast<int>(best) + 1);
  }
  return blocks;
}

/// Checks every structural invariant and returns the trace untouched:
/// non-empty positive segments, tokens indexed 1..N with nondecreasing CU
/// delays and computation timestamps, every CU delay on a segment boundary.
/// Throws MalformedTrace on the first violation.
inline const Trace& validate_trace(const Trace& trace) {
  if (trace.segments.empty())
    throw MalformedTrace("trace has no source segments");
  for (const SourceSegment& s : trace.segments)
    if (!std::isfinite(s.duration_ms) || s.duration_ms <= 0.0)
      throw MalformedTrace("segment durations must be positive");
  if (trace.reference_length < 1)
    throw MalformedTrace("reference length must be >= 1");

  double prev_cu = 0.0;
  double prev_c = 0.0;
  for (std::size_t i = 0; i < trace.tokens.size(); ++i) {
    const TokenEvent& t = trace.tokens[i];
    if (t.index != static_cast<int>(i) + 1)
      throw MalformedTrace("token indices must run 1..N in order");
    if (!std::isfinite(t.cu_delay_ms) || !std::isfinite(t.computation_ts_ms))
      throw MalformedTrace("token times must be finite");
    if (t.computation_ts_ms < 0.0)
      throw MalformedTrace("computation timestamps must be >= 0");
    if (t.cu_delay_ms < prev_cu)
      throw MalformedTrace("CU delays must be nondecreasing");
    if (t.computation_ts_ms < prev_c)
      throw MalformedTrace("computation timestamps must be nondecreasing");
    prev_cu = t.cu_delay_ms;
    prev_c = t.computation_ts_ms;
  }
  token_blocks(trace);  // every delay must sit on a boundary
  return trace;
}

/// Per-segment decomposition of the token stream. For segment j (1-based):
///   tau[j-1]                index of the last token emitted before segment j
///                           was processed, 0 when there is none;
///   block_inference_ms[j-1] pure computation spent on tokens emitted while
///                           segment j was the latest read, i.e. the
///                           computation-timestamp difference between
///                           consecutive tau boundaries;
///   buffers_ms[j-1]         backlog carried into segment j: generation work
///                           from earlier blocks not yet absorbed by elapsed
///                           speech.
struct BlockStructure {
  std::vector<int> tau;
  std::vector<double> block_inference_ms;
  std::vector<double> buffers_ms;
};

namespace detail {

// Backlog recursion: beta_1 = 0, beta_j = max(0, beta_{j-1} + B_{j-1} - T_j).
inline std::vector<double> backlog_buffers(
    const std::vector<SourceSegment>& segments,
    const std::vector<double>& block_inference_ms) {
  std::vector<double> buffers(segments.size(), 0.0);
  for (std::size_t j = 1; j < segments.size(); ++j)
    buffers[j] = std::max(0.0, buffers[j - 1] + block_inference_ms[j - 1] -
                                   segments[j].duration_ms);
  return buffers;
}

}  // namespace detail

/// Derives the block structure of a validated trace. Pure: identical input
/// yields identical output. The block inference totals partition the last
/// computation timestamp exactly, and tau is nondecreasing with tau[0] == 0.
inline BlockStructure derive_blocks(const Trace& trace) {
  const std::size_t num_segments = trace.segments.size();
  const std::vector<int> blocks = token_blocks(trace);
  const int token_count = static_cast<int>(trace.tokens.size());

  BlockStructure out;
  out.tau.resize(num_segments);
  std::size_t consumed = 0;
  for (std::size_t j = 0; j < num_segments; ++j) {
    // tau for segment j+1 counts the tokens emitted in blocks 1..j.
    while (consumed < blocks.size() &&
           blocks[consumed] <= static_cast<int>(j))
      ++consumed;
    out.tau[j] = static_cast<int>(consumed);
  }

  const auto computation_at = [&](int token_index) {
    return token_index == 0
               ? 0.0
               : trace.tokens[static_cast<std::size_t>(token_index) - 1]
                     .computation_ts_ms;
  };
  out.block_inference_ms.resize(num_segments);
  for (std::size_t j = 0; j < num_segments; ++j) {
    const int next_tau =
        j + 1 < num_segments ? out.tau[j + 1] : token_count;
    out.block_inference_ms[j] =
        computation_at(next_tau) - computation_at(out.tau[j]);
  }

  out.buffers_ms =
      detail::backlog_buffers(trace.segments, out.block_inference_ms);
  return out;
}

}  // namespace simulag
