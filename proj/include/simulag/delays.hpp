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

#include <optional>
#include <string>
#include <vector>

#include "simulag/errors.hpp"
#include "simulag/trace.hpp"

namespace simulag {

/// The three per-token delay readings.
///   CU       source audio consumed at emission; ignores computation.
///   CA       CU plus the cumulative computation timestamp. Treats the
///            parallel read/write loop as sequential, so it overstates the
///            delay of late tokens on long streams.
///   CA_STAR  corrected computation-aware delay: the token's true wall-clock
///            availability under a single non-preemptive generation worker.
enum class Mode { CU, CA, CA_STAR };

inline const char* mode_name(Mode mode) {
  switch (mode) {
    case Mode::CU: return "CU";
    case Mode::CA: return "CA";
    case Mode::CA_STAR: return "CA_STAR";
  }
  return "?";
}

/// Per-token delays of one trace under one mode, in milliseconds.
/// `inference_ms` carries each token's within-block inference time and is
/// populated for CA_STAR only.
struct DelaySequence {
  Mode mode = Mode::CU;
  std::vector<double> values_ms;
  std::optional<std::vector<double>> inference_ms;
};

/// Computation-unaware delays: the theoretical delay of each token, equal to
/// the source audio consumed when it was emitted.
inline DelaySequence cu_delays(const Trace& trace) {
  DelaySequence seq;
  seq.mode = Mode::CU;
  seq.values_ms.reserve(trace.tokens.size());
  for (const TokenEvent& t : trace.tokens)
    seq.values_ms.push_back(t.cu_delay_ms);
  return seq;
}

/// Legacy computation-aware delays: CU delay plus the cumulative computation
/// timestamp of the token.
inline DelaySequence legacy_ca_delays(const Trace& trace) {
  DelaySequence seq;
  seq.mode = Mode::CA;
  seq.values_ms.reserve(trace.tokens.size());
  for (const TokenEvent& t : trace.tokens)
    seq.values_ms.push_back(t.cu_delay_ms + t.computation_ts_ms);
  return seq;
}

/// Backlog buffer per segment: beta_1 = 0, and each following segment carries
/// max(0, previous backlog + previous block's inference - own duration).
/// Recomputed from the block inference totals so the result only depends on
/// the decomposition, not on how `blocks` was filled.
inline std::vector<double> buffers(const Trace& trace,
                                   const BlockStructure& blocks) {
  return detail::backlog_buffers(trace.segments, blocks.block_inference_ms);
}

/// Corrected computation-aware delays. For token i in block j:
///
///   inference I_i = C_i - C_tau(j)   computation since the block boundary
///   delay       = beta_j + I_i + (arrival time of segment j)
///
/// which equals the token's wall-clock availability when a single worker
/// generates blocks in order, each starting at max(segment arrival, previous
/// block's finish).
inline DelaySequence ca_star_delays(const Trace& trace) {
  const BlockStructure blocks = derive_blocks(trace);
  const std::vector<int> token_block = token_blocks(trace);
  const std::vector<double> arrivals = arrival_times(trace);

  DelaySequence seq;
  seq.mode = Mode::CA_STAR;
  seq.values_ms.reserve(trace.tokens.size());
  seq.inference_ms.emplace();
  seq.inference_ms->reserve(trace.tokens.size());

  for (std::size_t i = 0; i < trace.tokens.size(); ++i) {
    const int j = token_block[i];
    const int boundary = blocks.tau[static_cast<std::size_t>(j) - 1];
    const double boundary_c =
        boundary == 0
            ? 0.0
            : trace.tokens[static_cast<std::size_t>(boundary) - 1]
                  .computation_ts_ms;
    const double inference =
        trace.tokens[i].computation_ts_ms - boundary_c;
    seq.inference_ms->push_back(inference);
    seq.values_ms.push_back(
        blocks.buffers_ms[static_cast<std::size_t>(j) - 1] + inference +
        arrivals[static_cast<std::size_t>(j) - 1]);
  }
  return seq;
}

/// Dispatch helper for metric and report code.
inline DelaySequence delays_for(const Trace& trace, Mode mode) {
  switch (mode) {
    case Mode::CU: return cu_delays(trace);
    case Mode::CA: return legacy_ca_delays(trace);
    case Mode::CA_STAR: return ca_star_delays(trace);
  }
  throw std::invalid_argument("unknown delay mode");
}

}  // namespace simulag
