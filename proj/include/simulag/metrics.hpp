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
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "simulag/delays.hpp"
#include "simulag/errors.hpp"
#include "simulag/trace.hpp"

namespace simulag {

/// AL normalizes lagging against the reference length; LAAL against
/// max(reference length, hypothesis length) so over-generation cannot be
/// rewarded.
enum class MetricVariant { AL, LAAL };

inline const char* metric_name(MetricVariant variant) {
  return variant == MetricVariant::AL ? "AL" : "LAAL";
}

/// Ideal delays under perfectly uniform emission:
/// values_ms[i-1] = (i - 1) * total / denominator.
struct OracleDelays {
  std::vector<double> values_ms;
  int denominator = 1;
};

/// Builds the oracle delay sequence for one instance. `hyp_len` entries are
/// produced; the denominator is ref_len for AL and max(ref_len, hyp_len) for
/// LAAL. Throws DegenerateInstance when ref_len < 1 or total_ms <= 0.
inline OracleDelays oracle_delays(double total_ms, int ref_len, int hyp_len,
                                  MetricVariant variant) {
  if (ref_len < 1)
    throw DegenerateInstance("reference length must be >= 1");
  if (!(total_ms > 0.0))
    throw DegenerateInstance("total source duration must be > 0");
  if (hyp_len < 0)
    throw DegenerateInstance("hypothesis length must be >= 0");

  OracleDelays oracle;
  oracle.denominator = variant == MetricVariant::AL
                           ? ref_len
                           : std::max(ref_len, hyp_len);
  oracle.values_ms.reserve(static_cast<std::size_t>(hyp_len));
  for (int i = 0; i < hyp_len; ++i)
    oracle.values_ms.push_back(i * total_ms / oracle.denominator);
  return oracle;
}

/// First token whose delay reaches the total source duration (within the
/// boundary tolerance); metrics average only up to it. Falls back to the
/// last token when no delay reaches the total. 1-based.
/// Throws EmptyHypothesis for a tokenless sequence.
inline int cutoff_index(const DelaySequence& delays, double total_ms) {
  if (delays.values_ms.empty())
    throw EmptyHypothesis("cutoff of an empty delay sequence");
  for (std::size_t i = 0; i < delays.values_ms.size(); ++i)
    if (delays.values_ms[i] >= total_ms - kBoundaryToleranceMs)
      return static_cast<int>(i) + 1;
  return static_cast<int>(delays.values_ms.size());
}

/// Mean of (delay - oracle delay) over tokens 1..cutoff.
inline double average_lagging(const DelaySequence& delays,
                              const OracleDelays& oracle, int cutoff) {
  if (cutoff < 1 ||
      static_cast<std::size_t>(cutoff) > delays.values_ms.size() ||
      static_cast<std::size_t>(cutoff) > oracle.values_ms.size())
    throw std::out_of_range("cutoff outside delay/oracle sequences");
  double sum = 0.0;
  for (int i = 0; i < cutoff; ++i)
    sum += delays.values_ms[static_cast<std::size_t>(i)] -
           oracle.values_ms[static_cast<std::size_t>(i)];
  return sum / cutoff;
}

/// Scores of one delay mode on one instance.
struct ModeMetrics {
  double al_ms = 0.0;
  double laal_ms = 0.0;
  int cutoff_index = 0;
};

/// Per-instance latency scores. `metrics` holds an entry per requested mode;
/// the entry is empty when the instance emitted no tokens.
struct LatencyReport {
  std::string instance_id;
  std::map<Mode, std::optional<ModeMetrics>> metrics;
  int token_count = 0;
  int reference_length = 0;
  double total_source_ms = 0.0;
};

/// Evaluates one validated trace under the requested modes. Each mode's
/// cutoff comes from that mode's own delay sequence, so inflated CA delays
/// truncate earlier than CU ones. A tokenless instance yields empty metrics
/// rather than an error.
inline LatencyReport evaluate_instance(const Trace& trace,
                                       const std::set<Mode>& modes) {
  LatencyReport report;
  report.instance_id = trace.id;
  report.token_count = static_cast<int>(trace.tokens.size());
  report.reference_length = trace.reference_length;
  report.total_source_ms = trace.total_source_ms();

  for (Mode mode : modes) {
    if (report.token_count == 0) {
      report.metrics[mode] = std::nullopt;
      continue;
    }
    const DelaySequence delays = delays_for(trace, mode);
    const int cutoff = cutoff_index(delays, report.total_source_ms);
    const OracleDelays al_oracle =
        oracle_delays(report.total_source_ms, report.reference_length,
                      report.token_count, MetricVariant::AL);
    const OracleDelays laal_oracle =
        oracle_delays(report.total_source_ms, report.reference_length,
                      report.token_count, MetricVariant::LAAL);
    report.metrics[mode] =
        ModeMetrics{average_lagging(delays, al_oracle, cutoff),
                    average_lagging(delays, laal_oracle, cutoff), cutoff};
  }
  return report;
}

struct ModeAverages {
  double al_ms = 0.0;
  double laal_ms = 0.0;
};

/// Corpus-level means plus the bookkeeping of how many instances actually
/// contributed.
struct CorpusSummary {
  std::map<Mode, ModeAverages> means;
  int scored = 0;
  int skipped = 0;
};

/// Unweighted per-mode mean over instances, skipping instances whose metrics
/// are empty. Summation runs in report order so corpus means are
/// bit-reproducible for a fixed input order.
/// Throws NoScorableInstances when nothing contributes.
inline CorpusSummary corpus_average(const std::vector<LatencyReport>& reports) {
  CorpusSummary summary;
  std::map<Mode, ModeAverages> sums;
  std::map<Mode, int> counts;

  for (const LatencyReport& report : reports) {
    bool scorable = false;
    for (const auto& [mode, metrics] : report.metrics) {
      if (!metrics) continue;
      scorable = true;
      sums[mode].al_ms += metrics->al_ms;
      sums[mode].laal_ms += metrics->laal_ms;
      counts[mode] += 1;
    }
    if (scorable)
      summary.scored += 1;
    else
      summary.skipped += 1;
  }
  if (summary.scored == 0)
    throw NoScorableInstances("corpus has no instance with metrics");

  for (const auto& [mode, sum] : sums)
    summary.means[mode] = ModeAverages{sum.al_ms / counts[mode],
                                       sum.laal_ms / counts[mode]};
  return summary;
}

}  // namespace simulag
