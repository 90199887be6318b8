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

// Command layer. Everything the binary does lives here, driven by a
// RunConfig, so tests can call commands directly; the binary itself only
// parses flags. Exit codes: 0 success, 1 usage error, 2 data error.
//
// Instances are evaluated in parallel under --workers; report rows are
// written serially in input order, so output bytes do not depend on the
// worker count. --deterministic additionally pins the pool to one thread.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <climits>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"
#include "simulag/delays.hpp"
#include "simulag/errors.hpp"
#include "simulag/log_io.hpp"
#include "simulag/metrics.hpp"
#include "simulag/simulate.hpp"
#include "simulag/trace.hpp"

namespace simulag {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

enum class Command { Evaluate, Simulate, ScaleStudy, Compare };
enum class OutputFormat { Csv, Records };

struct RunConfig {
  Command command = Command::Evaluate;
  std::vector<std::string> inputs;
  std::string output;  // empty writes to stdout

  std::set<Mode> modes{Mode::CU, Mode::CA, Mode::CA_STAR};
  std::set<MetricVariant> metrics{MetricVariant::AL, MetricVariant::LAAL};

  // simulate
  PolicySpec policy;
  ComputeModel compute = ComputeModel::constant(0.0);
  double segment_ms = 250.0;
  int segments = 100;
  int instances = 1;
  std::uint64_t seed = 1;

  // scale-study
  std::vector<int> repeats{1, 2, 3, 4};

  bool lenient = false;
  bool deterministic = false;
  int workers = 0;  // 0 picks hardware concurrency
  OutputFormat format = OutputFormat::Csv;
  std::string dump_delays;  // compare: optional per-token delay CSV
};

namespace detail {

inline std::string lower(std::string text) {
  for (char& c : text) c = static_cast<char>(std::tolower(c));
  return text;
}

inline std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string::size_type start = 0;
  for (;;) {
    const auto pos = text.find(sep, start);
    if (pos == std::string::npos) {
      parts.push_back(text.substr(start));
      return parts;
    }
    parts.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::optional<double> to_double(const std::string& text) {
  if (text.empty()) return std::nullopt;
  char* end = nullptr;
  const double value = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size()) return std::nullopt;
  return value;
}

inline std::optional<int> to_int(const std::string& text) {
  if (text.empty()) return std::nullopt;
  char* end = nullptr;
  const long value = std::strtol(text.c_str(), &end, 10);
  if (end != text.c_str() + text.size()) return std::nullopt;
  if (value < INT_MIN || value > INT_MAX) return std::nullopt;
  return static_cast<int>(value);
}

}  // namespace detail

/// Parses a comma-separated mode list, e.g. "CU,CA*". Case-insensitive;
/// CA_STAR, CA-STAR, CA* and CASTAR all mean the corrected mode; "all"
/// selects every mode. Throws std::invalid_argument on unknown names.
inline std::set<Mode> parse_modes(const std::string& text) {
  std::set<Mode> modes;
  for (const std::string& raw : detail::split(text, ',')) {
    const std::string name = detail::lower(raw);
    if (name.empty()) continue;
    if (name == "cu") {
      modes.insert(Mode::CU);
    } else if (name == "ca") {
      modes.insert(Mode::CA);
    } else if (name == "ca*" || name == "ca_star" || name == "ca-star" ||
               name == "castar") {
      modes.insert(Mode::CA_STAR);
    } else if (name == "all") {
      modes = {Mode::CU, Mode::CA, Mode::CA_STAR};
    } else {
      throw std::invalid_argument("unknown mode '" + raw + "'");
    }
  }
  if (modes.empty()) throw std::invalid_argument("empty mode list");
  return modes;
}

/// Parses a comma-separated metric list: AL, LAAL or all.
inline std::set<MetricVariant> parse_metrics(const std::string& text) {
  std::set<MetricVariant> metrics;
  for (const std::string& raw : detail::split(text, ',')) {
    const std::string name = detail::lower(raw);
    if (name.empty()) continue;
    if (name == "al") {
      metrics.insert(MetricVariant::AL);
    } else if (name == "laal") {
      metrics.insert(MetricVariant::LAAL);
    } else if (name == "all") {
      metrics = {MetricVariant::AL, MetricVariant::LAAL};
    } else {
      throw std::invalid_argument("unknown metric '" + raw + "'");
    }
  }
  if (metrics.empty()) throw std::invalid_argument("empty metric list");
  return metrics;
}

/// Parses "k,n" or "k,n,tail" into a wait-k stride-n policy.
inline PolicySpec parse_policy(const std::string& text) {
  const auto parts = detail::split(text, ',');
  if (parts.size() != 2 && parts.size() != 3)
    throw InvalidPolicy("--policy expects k,n or k,n,tail; got '" + text +
                        "'");
  PolicySpec policy;
  const auto k = detail::to_int(parts[0]);
  const auto n = detail::to_int(parts[1]);
  if (!k || !n)
    throw InvalidPolicy("--policy components must be integers; got '" + text +
                        "'");
  policy.k = *k;
  policy.n = *n;
  if (parts.size() == 3) {
    const auto tail = detail::to_int(parts[2]);
    if (!tail)
      throw InvalidPolicy("--policy tail must be an integer; got '" + text +
                          "'");
    policy.tail_tokens = *tail;
  }
  return policy;
}

/// Parses "constant:<ms>" or "uniform:<lo>,<hi>". The uniform model is
/// seeded later, per instance, from the run seed.
inline ComputeModel parse_compute(const std::string& text) {
  const auto colon = text.find(':');
  const std::string head =
      detail::lower(colon == std::string::npos ? text : text.substr(0, colon));
  const std::string args =
      colon == std::string::npos ? "" : text.substr(colon + 1);
  if (head == "constant") {
    const auto ms = detail::to_double(args);
    if (!ms) throw InvalidCompute("constant compute needs a number, got '" +
                                  args + "'");
    return ComputeModel::constant(*ms);
  }
  if (head == "uniform") {
    const auto parts = detail::split(args, ',');
    if (parts.size() == 2) {
      const auto lo = detail::to_double(parts[0]);
      const auto hi = detail::to_double(parts[1]);
      if (lo && hi) return ComputeModel::seeded_uniform(*lo, *hi, 0);
    }
    throw InvalidCompute("uniform compute needs lo,hi; got '" + args + "'");
  }
  throw InvalidCompute("unknown compute model '" + text + "'");
}

/// Parses a comma-separated repeat list; must be positive and ascending.
inline std::vector<int> parse_repeats(const std::string& text) {
  std::vector<int> repeats;
  for (const std::string& raw : detail::split(text, ',')) {
    if (raw.empty()) continue;
    const auto value = detail::to_int(raw);
    if (!value || *value < 1)
      throw std::invalid_argument("repeats must be positive integers, got '" +
                                  raw + "'");
    if (!repeats.empty() && *value <= repeats.back())
      throw std::invalid_argument("repeats must be ascending");
    repeats.push_back(*value);
  }
  if (repeats.empty()) throw std::invalid_argument("empty repeat list");
  return repeats;
}

namespace detail {

/// Runs body(0..count-1) on a small thread pool. Work is claimed via an
/// atomic counter; the first exception wins and is rethrown after join.
template <typename Body>
void parallel_for(std::size_t count, int workers, const Body& body) {
  if (count == 0) return;
  std::size_t threads = workers > 0
                            ? static_cast<std::size_t>(workers)
                            : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
        if (i >= count) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

/// Writes to the named file, or to stdout when the path is empty.
class OutputTarget {
 public:
  explicit OutputTarget(const std::string& path) : path_(path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_)
        throw std::runtime_error("cannot open output '" + path + "'");
    }
  }

  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

  void finish() {
    stream().flush();
    if (stream().fail())
      throw std::runtime_error("I/O failure writing '" +
                               (path_.empty() ? "<stdout>" : path_) + "'");
  }

 private:
  std::string path_;
  std::ofstream file_;
};

inline std::string csv_field(const std::string& value) {
  if (value.find_first_of(",\"\n") == std::string::npos) return value;
  std::string quoted = "\"";
  for (char c : value) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current += c;
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

template <typename Fn>
int guard(const Fn& body) {
  try {
    return body();
  } catch (const InvalidPolicy& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InvalidCompute& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
}

inline int effective_workers(const RunConfig& config) {
  return config.deterministic ? 1 : config.workers;
}

inline ReadLogResult read_inputs(const RunConfig& config) {
  ReadLogResult all;
  for (const std::string& path : config.inputs) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open input '" + path + "'");
    ReadLogResult one = read_log(in, config.lenient);
    for (Trace& trace : one.traces) all.traces.push_back(std::move(trace));
    for (SkippedRecord& skip : one.skipped) {
      std::cerr << path << " line " << skip.line << " skipped: " << skip.reason
                << '\n';
      all.skipped.push_back(std::move(skip));
    }
  }
  return all;
}

inline const char* display_mode(Mode mode) {
  return mode == Mode::CA_STAR ? "CA*" : mode_name(mode);
}

}  // namespace detail

/// Scores every trace under the requested modes, in parallel, keeping input
/// order in the result.
inline std::vector<LatencyReport> evaluate_corpus(
    const std::vector<Trace>& traces, const std::set<Mode>& modes,
    int workers) {
  std::vector<LatencyReport> reports(traces.size());
  detail::parallel_for(traces.size(), workers, [&](std::size_t i) {
    reports[i] = evaluate_instance(traces[i], modes);
  });
  return reports;
}

/// One parsed row of the evaluate CSV report. Empty numeric fields (metric
/// deselected, unscored instance, corpus rows) come back as nullopt.
struct ReportRow {
  std::string instance_id;
  Mode mode = Mode::CU;
  std::optional<double> al_ms;
  std::optional<double> laal_ms;
  std::optional<int> cutoff;
  std::optional<int> tokens;
  std::optional<int> ref_len;
  std::optional<double> source_ms;
};

/// Parses one line of the evaluate report. Header, footer comments and blank
/// lines yield nullopt; structurally bad rows throw std::invalid_argument.
inline std::optional<ReportRow> parse_report_row(const std::string& line) {
  if (line.empty() || line[0] == '#') return std::nullopt;
  if (line.rfind("instance_id,", 0) == 0) return std::nullopt;
  const auto fields = detail::split_csv(line);
  if (fields.size() != 8)
    throw std::invalid_argument("expected 8 CSV fields, got " +
                                std::to_string(fields.size()));
  ReportRow row;
  row.instance_id = fields[0];
  if (fields[1] == "CU") {
    row.mode = Mode::CU;
  } else if (fields[1] == "CA") {
    row.mode = Mode::CA;
  } else if (fields[1] == "CA_STAR") {
    row.mode = Mode::CA_STAR;
  } else {
    throw std::invalid_argument("unknown mode field '" + fields[1] + "'");
  }
  const auto need_double = [&](const std::string& text,
                               const char* what) -> std::optional<double> {
    if (text.empty()) return std::nullopt;
    const auto value = detail::to_double(text);
    if (!value)
      throw std::invalid_argument(std::string("bad ") + what + " field '" +
                                  text + "'");
    return value;
  };
  const auto need_int = [&](const std::string& text,
                            const char* what) -> std::optional<int> {
    if (text.empty()) return std::nullopt;
    const auto value = detail::to_int(text);
    if (!value)
      throw std::invalid_argument(std::string("bad ") + what + " field '" +
                                  text + "'");
    return value;
  };
  row.al_ms = need_double(fields[2], "AL_ms");
  row.laal_ms = need_double(fields[3], "LAAL_ms");
  row.cutoff = need_int(fields[4], "cutoff");
  row.tokens = need_int(fields[5], "tokens");
  row.ref_len = need_int(fields[6], "ref_len");
  row.source_ms = need_double(fields[7], "source_ms");
  return row;
}

namespace detail {

inline void write_evaluate_csv(std::ostream& out,
                               const std::vector<LatencyReport>& reports,
                               const CorpusSummary& summary,
                               const RunConfig& config,
                               std::size_t parse_skipped) {
  const bool want_al = config.metrics.count(MetricVariant::AL) > 0;
  const bool want_laal = config.metrics.count(MetricVariant::LAAL) > 0;
  out << "instance_id,mode,AL_ms,LAAL_ms,cutoff,tokens,ref_len,source_ms\n";
  for (const LatencyReport& report : reports) {
    for (const auto& [mode, metrics] : report.metrics) {
      out << csv_field(report.instance_id) << ',' << mode_name(mode) << ',';
      if (metrics && want_al) out << format_ms(metrics->al_ms);
      out << ',';
      if (metrics && want_laal) out << format_ms(metrics->laal_ms);
      out << ',';
      if (metrics) out << metrics->cutoff_index;
      out << ',' << report.token_count << ',' << report.reference_length
          << ',' << format_ms(report.total_source_ms) << '\n';
    }
  }
  for (const auto& [mode, mean] : summary.means) {
    out << "corpus_mean," << mode_name(mode) << ',';
    if (want_al) out << format_ms(mean.al_ms);
    out << ',';
    if (want_laal) out << format_ms(mean.laal_ms);
    out << ",,,,\n";
  }
  out << "# scored=" << summary.scored << '\n';
  out << "# skipped=" << summary.skipped + parse_skipped << '\n';
}

inline void write_evaluate_records(std::ostream& out,
                                   const std::vector<LatencyReport>& reports,
                                   const CorpusSummary& summary,
                                   const RunConfig& config,
                                   std::size_t parse_skipped) {
  const bool want_al = config.metrics.count(MetricVariant::AL) > 0;
  const bool want_laal = config.metrics.count(MetricVariant::LAAL) > 0;
  for (const LatencyReport& report : reports) {
    for (const auto& [mode, metrics] : report.metrics) {
      nlohmann::json row{{"instance_id", report.instance_id},
                         {"mode", mode_name(mode)},
                         {"tokens", report.token_count},
                         {"ref_len", report.reference_length},
                         {"source_ms", report.total_source_ms}};
      if (metrics) {
        if (want_al) row["al_ms"] = metrics->al_ms;
        if (want_laal) row["laal_ms"] = metrics->laal_ms;
        row["cutoff"] = metrics->cutoff_index;
      }
      out << row.dump() << '\n';
    }
  }
  for (const auto& [mode, mean] : summary.means) {
    nlohmann::json row{{"instance_id", "corpus_mean"},
                       {"mode", mode_name(mode)}};
    if (want_al) row["al_ms"] = mean.al_ms;
    if (want_laal) row["laal_ms"] = mean.laal_ms;
    out << row.dump() << '\n';
  }
  out << nlohmann::json{{"scored", summary.scored},
                        {"skipped", summary.skipped + parse_skipped}}
             .dump()
      << '\n';
}

}  // namespace detail

/// Scores an input log and writes per-instance rows plus corpus means.
/// Exit 2 covers unreadable input, strict-mode parse failures, and a corpus
/// with nothing to score; lenient mode skips bad lines and reports the count
/// in the footer.
inline int cmd_evaluate(const RunConfig& config) {
  return detail::guard([&]() -> int {
    if (config.inputs.empty()) {
      std::cerr << "error: evaluate needs at least one --input\n";
      return kExitUsage;
    }
    const ReadLogResult input = detail::read_inputs(config);
    const std::vector<LatencyReport> reports = evaluate_corpus(
        input.traces, config.modes, detail::effective_workers(config));
    const CorpusSummary summary = corpus_average(reports);

    detail::OutputTarget target(config.output);
    if (config.format == OutputFormat::Csv)
      detail::write_evaluate_csv(target.stream(), reports, summary, config,
                                 input.skipped.size());
    else
      detail::write_evaluate_records(target.stream(), reports, summary,
                                     config, input.skipped.size());
    target.finish();
    return kExitOk;
  });
}

namespace detail {

/// "runs/sim.jsonl" -> "runs/sim.truth.jsonl"; an extensionless path just
/// gains ".truth".
inline std::string truth_sidecar_path(const std::string& output) {
  const auto slash = output.find_last_of('/');
  const auto dot = output.find_last_of('.');
  if (dot == std::string::npos ||
      (slash != std::string::npos && dot < slash))
    return output + ".truth";
  return output.substr(0, dot) + ".truth" + output.substr(dot);
}

}  // namespace detail

/// Simulates a corpus of wait-k stride-n traces and writes both the log and
/// a ground-truth sidecar of wall-clock emission times per instance.
/// Deterministic for a fixed seed; instance i uses seed + i.
inline int cmd_simulate(const RunConfig& config) {
  return detail::guard([&]() -> int {
    if (config.output.empty()) {
      std::cerr << "error: simulate needs --output\n";
      return kExitUsage;
    }
    if (config.segments < 1 || !(config.segment_ms > 0.0)) {
      std::cerr << "error: need --segments >= 1 and --segment-ms > 0\n";
      return kExitUsage;
    }
    if (config.instances < 1) {
      std::cerr << "error: need --instances >= 1\n";
      return kExitUsage;
    }

    const std::vector<double> durations(
        static_cast<std::size_t>(config.segments), config.segment_ms);
    std::vector<Trace> traces(static_cast<std::size_t>(config.instances));
    std::vector<std::vector<double>> truths(
        static_cast<std::size_t>(config.instances));
    detail::parallel_for(
        traces.size(), detail::effective_workers(config), [&](std::size_t i) {
          ComputeModel compute = config.compute;
          if (compute.kind == ComputeKind::SeededUniform)
            compute.seed = config.seed + i;
          SimulationOutcome outcome =
              simulate(durations, config.policy, compute);
          outcome.trace.id = std::to_string(i);
          traces[i] = std::move(outcome.trace);
          truths[i] = std::move(outcome.emission_wall_ms);
        });

    detail::OutputTarget log_target(config.output);
    write_log(traces, log_target.stream());
    log_target.finish();

    const std::string truth_path =
        detail::truth_sidecar_path(config.output);
    detail::OutputTarget truth_target(truth_path);
    for (std::size_t i = 0; i < truths.size(); ++i) {
      std::string line = "{\"index\":" + std::to_string(i) +
                         ",\"emission_wall_ms\":";
      detail::append_ms_array(line, truths[i]);
      line += '}';
      truth_target.stream() << line << '\n';
    }
    truth_target.finish();

    std::cout << "wrote " << traces.size() << " instance(s) to "
              << config.output << " (ground truth: " << truth_path << ")\n";
    return kExitOk;
  });
}

namespace detail {

struct ScaleRow {
  int repeat = 1;
  Mode mode = Mode::CU;
  ModeAverages means;
};

}  // namespace detail

/// Re-evaluates the corpus under concat_scale for each repeat factor and
/// tabulates per-mode means, plus summary rows checking that legacy CA grows
/// strictly while CA* stays put (as max drift vs the first repeat, percent).
inline int cmd_scale_study(const RunConfig& config) {
  return detail::guard([&]() -> int {
    if (config.inputs.empty()) {
      std::cerr << "error: scale-study needs at least one --input\n";
      return kExitUsage;
    }
    if (config.repeats.empty()) {
      std::cerr << "error: scale-study needs a repeat list\n";
      return kExitUsage;
    }
    for (std::size_t i = 0; i < config.repeats.size(); ++i) {
      if (config.repeats[i] < 1 ||
          (i > 0 && config.repeats[i] <= config.repeats[i - 1])) {
        std::cerr << "error: repeats must be positive and ascending\n";
        return kExitUsage;
      }
    }

    const ReadLogResult input = detail::read_inputs(config);
    std::vector<detail::ScaleRow> rows;
    std::map<Mode, std::vector<ModeAverages>> by_mode;
    for (const int repeat : config.repeats) {
      std::vector<Trace> scaled;
      scaled.reserve(input.traces.size());
      for (const Trace& trace : input.traces)
        scaled.push_back(concat_scale(trace, repeat));
      const std::vector<LatencyReport> reports = evaluate_corpus(
          scaled, config.modes, detail::effective_workers(config));
      const CorpusSummary summary = corpus_average(reports);
      for (const auto& [mode, mean] : summary.means) {
        rows.push_back({repeat, mode, mean});
        by_mode[mode].push_back(mean);
      }
    }

    const bool want_al = config.metrics.count(MetricVariant::AL) > 0;
    const bool want_laal = config.metrics.count(MetricVariant::LAAL) > 0;
    const auto strictly_increasing = [](const std::vector<ModeAverages>& v,
                                        bool laal) {
      for (std::size_t i = 1; i < v.size(); ++i) {
        const double prev = laal ? v[i - 1].laal_ms : v[i - 1].al_ms;
        const double cur = laal ? v[i].laal_ms : v[i].al_ms;
        if (!(cur > prev)) return false;
      }
      return true;
    };
    const auto max_drift_pct = [](const std::vector<ModeAverages>& v,
                                  bool laal) {
      const double base = laal ? v.front().laal_ms : v.front().al_ms;
      double drift = 0.0;
      for (const ModeAverages& m : v) {
        const double cur = laal ? m.laal_ms : m.al_ms;
        drift = std::max(drift, std::fabs(cur - base));
      }
      return base == 0.0 ? 0.0 : 100.0 * drift / std::fabs(base);
    };

    detail::OutputTarget target(config.output);
    std::ostream& out = target.stream();
    if (config.format == OutputFormat::Csv) {
      out << "repeat,mode,AL_ms,LAAL_ms\n";
      for (const detail::ScaleRow& row : rows) {
        out << row.repeat << ',' << mode_name(row.mode) << ',';
        if (want_al) out << detail::format_ms(row.means.al_ms);
        out << ',';
        if (want_laal) out << detail::format_ms(row.means.laal_ms);
        out << '\n';
      }
      if (config.repeats.size() > 1) {
        if (auto it = by_mode.find(Mode::CA); it != by_mode.end())
          out << "summary,CA_strictly_increasing,"
              << (strictly_increasing(it->second, false) ? 1 : 0) << ','
              << (strictly_increasing(it->second, true) ? 1 : 0) << '\n';
        if (auto it = by_mode.find(Mode::CA_STAR); it != by_mode.end()) {
          char buf[64];
          std::snprintf(buf, sizeof buf, "summary,CA_STAR_max_drift_pct,%.3f,%.3f",
                        max_drift_pct(it->second, false),
                        max_drift_pct(it->second, true));
          out << buf << '\n';
        }
      }
    } else {
      for (const detail::ScaleRow& row : rows) {
        nlohmann::json record{{"repeat", row.repeat},
                              {"mode", mode_name(row.mode)}};
        if (want_al) record["al_ms"] = row.means.al_ms;
        if (want_laal) record["laal_ms"] = row.means.laal_ms;
        out << record.dump() << '\n';
      }
      if (config.repeats.size() > 1) {
        if (auto it = by_mode.find(Mode::CA); it != by_mode.end())
          out << nlohmann::json{{"summary", "CA_strictly_increasing"},
                                {"al", strictly_increasing(it->second, false)},
                                {"laal", strictly_increasing(it->second, true)}}
                     .dump()
              << '\n';
        if (auto it = by_mode.find(Mode::CA_STAR); it != by_mode.end())
          out << nlohmann::json{{"summary", "CA_STAR_max_drift_pct"},
                                {"al", max_drift_pct(it->second, false)},
                                {"laal", max_drift_pct(it->second, true)}}
                     .dump()
              << '\n';
      }
    }
    target.finish();
    return kExitOk;
  });
}

/// Prints the corpus-mean comparison table across modes, one row per mode,
/// ms with one decimal. --dump-delays additionally writes every token's
/// delay per mode for plotting. The record format carries full precision.
inline int cmd_compare(const RunConfig& config) {
  return detail::guard([&]() -> int {
    if (config.inputs.size() != 1) {
      std::cerr << "error: compare needs exactly one --input\n";
      return kExitUsage;
    }
    const ReadLogResult input = detail::read_inputs(config);
    const std::vector<LatencyReport> reports = evaluate_corpus(
        input.traces, config.modes, detail::effective_workers(config));
    const CorpusSummary summary = corpus_average(reports);

    const bool want_al = config.metrics.count(MetricVariant::AL) > 0;
    const bool want_laal = config.metrics.count(MetricVariant::LAAL) > 0;
    detail::OutputTarget target(config.output);
    std::ostream& out = target.stream();
    if (config.format == OutputFormat::Csv) {
      out << "mode,AL_ms,LAAL_ms\n";
      for (const auto& [mode, mean] : summary.means) {
        char buf[128];
        if (want_al && want_laal)
          std::snprintf(buf, sizeof buf, "%s,%.1f,%.1f",
                        detail::display_mode(mode), mean.al_ms, mean.laal_ms);
        else if (want_al)
          std::snprintf(buf, sizeof buf, "%s,%.1f,",
                        detail::display_mode(mode), mean.al_ms);
        else
          std::snprintf(buf, sizeof buf, "%s,,%.1f",
                        detail::display_mode(mode), mean.laal_ms);
        out << buf << '\n';
      }
    } else {
      for (const auto& [mode, mean] : summary.means) {
        nlohmann::json row{{"mode", mode_name(mode)}};
        if (want_al) row["al_ms"] = mean.al_ms;
        if (want_laal) row["laal_ms"] = mean.laal_ms;
        out << row.dump() << '\n';
      }
      out << nlohmann::json{{"scored", summary.scored},
                            {"skipped",
                             summary.skipped + input.skipped.size()}}
                 .dump()
          << '\n';
    }
    target.finish();

    if (!config.dump_delays.empty()) {
      detail::OutputTarget dump_target(config.dump_delays);
      std::ostream& dump = dump_target.stream();
      dump << "instance_id,token,mode,delay_ms\n";
      for (const Trace& trace : input.traces) {
        for (const Mode mode : config.modes) {
          if (trace.tokens.empty()) continue;
          const DelaySequence delays = delays_for(trace, mode);
          for (std::size_t i = 0; i < delays.values_ms.size(); ++i)
            dump << detail::csv_field(trace.id) << ',' << i + 1 << ','
                 << mode_name(mode) << ','
                 << detail::format_ms(delays.values_ms[i]) << '\n';
        }
      }
      dump_target.finish();
    }
    return kExitOk;
  });
}

/// Dispatches on config.command.
inline int run_command(const RunConfig& config) {
  switch (config.command) {
    case Command::Evaluate:
      return cmd_evaluate(config);
    case Command::Simulate:
      return cmd_simulate(config);
    case Command::ScaleStudy:
      return cmd_scale_study(config);
    case Command::Compare:
      return cmd_compare(config);
  }
  return kExitUsage;
}

}  // namespace simulag
