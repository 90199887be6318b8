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

// Line-delimited evaluation logs, one JSON object per line, UTF-8.
//
// Fields (unknown ones are ignored on read and preserved nowhere):
//   index             int, instance identity
//   prediction        space-separated emitted tokens (optional)
//   delays            per-token CU delays, ms
//   elapsed           per-token legacy CA timestamps: delays[i] + C_i
//   computation       per-token cumulative computation C_i; when present it
//                     takes precedence over elapsed - delays, which inherits
//                     rounding error
//   source_length     total source duration, ms
//   segment_ms        uniform segment size (optional)
//   segment_durations explicit per-segment durations (optional)
//   reference         reference translation text (optional)
//
// Segment resolution order: explicit list, then uniform size tiled to
// source_length (last segment possibly shorter), then the sorted distinct
// delay values completed to source_length. Millisecond values are written
// with exactly 3 decimal places; reading a written log reproduces the traces
// field for field at that precision. Instance identity rides on `index`, so
// only numeric trace ids survive a round trip.

#include <cmath>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "simulag/errors.hpp"
#include "simulag/trace.hpp"

namespace simulag {

/// One decoded log line.
struct LogRecord {
  int index = 0;
  std::optional<std::string> prediction;
  std::vector<double> delays;
  std::vector<double> elapsed;
  std::optional<std::vector<double>> computation;
  double source_length = 0.0;
  std::optional<double> segment_ms;
  std::optional<std::vector<double>> segment_durations;
  std::optional<std::string> reference;
};

namespace detail {

inline std::vector<std::string> split_whitespace(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream stream(text);
  std::string word;
  while (stream >> word) out.push_back(word);
  return out;
}

inline std::vector<double> number_array(const nlohmann::json& value,
                                        const char* key, std::size_t line_no) {
  if (!value.is_array())
    throw ParseError(line_no,
                     std::string("field '") + key + "' must be an array");
  std::vector<double> out;
  out.reserve(value.size());
  for (const auto& item : value) {
    if (!item.is_number())
      throw ParseError(line_no, std::string("field '") + key +
                                    "' must contain only numbers");
    out.push_back(item.get<double>());
  }
  return out;
}

inline std::string format_ms(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3f", value);
  return buf;
}

inline void append_ms_array(std::string& out, const std::vector<double>& v) {
  out += '[';
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_ms(v[i]);
  }
  out += ']';
}

}  // namespace detail

/// Decodes one log line. Throws ParseError for undecodable JSON or wrong
/// field types and SchemaError for internally inconsistent lengths.
inline LogRecord parse_record(const std::string& line, std::size_t line_no) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(line_no, e.what());
  }
  if (!doc.is_object())
    throw ParseError(line_no, "record is not a JSON object");

  LogRecord rec;
  if (auto it = doc.find("index"); it != doc.end()) {
    if (!it->is_number_integer())
      throw ParseError(line_no, "field 'index' must be an integer");
    rec.index = it->get<int>();
  } else {
    rec.index = -1;  // caller substitutes the stream position
  }

  if (auto it = doc.find("delays"); it != doc.end())
    rec.delays = detail::number_array(*it, "delays", line_no);
  else
    throw ParseError(line_no, "missing required field 'delays'");

  if (auto it = doc.find("elapsed"); it != doc.end())
    rec.elapsed = detail::number_array(*it, "elapsed", line_no);
  else
    throw ParseError(line_no, "missing required field 'elapsed'");

  if (auto it = doc.find("computation"); it != doc.end())
    rec.computation = detail::number_array(*it, "computation", line_no);

  if (auto it = doc.find("source_length"); it != doc.end()) {
    if (!it->is_number())
      throw ParseError(line_no, "field 'source_length' must be a number");
    rec.source_length = it->get<double>();
  } else {
    throw ParseError(line_no, "missing required field 'source_length'");
  }

  if (auto it = doc.find("segment_ms"); it != doc.end()) {
    if (!it->is_number())
      throw ParseError(line_no, "field 'segment_ms' must be a number");
    rec.segment_ms = it->get<double>();
  }
  if (auto it = doc.find("segment_durations"); it != doc.end())
    rec.segment_durations =
        detail::number_array(*it, "segment_durations", line_no);

  if (auto it = doc.find("prediction"); it != doc.end()) {
    if (!it->is_string())
      throw ParseError(line_no, "field 'prediction' must be a string");
    rec.prediction = it->get<std::string>();
  }
  if (auto it = doc.find("reference"); it != doc.end()) {
    if (!it->is_string())
      throw ParseError(line_no, "field 'reference' must be a string");
    rec.reference = it->get<std::string>();
  }

  const std::size_t n = rec.delays.size();
  if (rec.elapsed.size() != n)
    throw SchemaError("line " + std::to_string(line_no) + ": " +
                      std::to_string(rec.elapsed.size()) +
                      " elapsed values for " + std::to_string(n) + " delays");
  if (rec.computation && rec.computation->size() != n)
    throw SchemaError("line " + std::to_string(line_no) + ": " +
                      std::to_string(rec.computation->size()) +
                      " computation values for " + std::to_string(n) +
                      " delays");
  if (rec.prediction) {
    const auto words = detail::split_whitespace(*rec.prediction);
    if (!words.empty() && words.size() != n)
      throw SchemaError("line " + std::to_string(line_no) + ": prediction has " +
                        std::to_string(words.size()) + " tokens but " +
                        std::to_string(n) + " delays");
  }
  return rec;
}

/// Builds and validates a Trace from a decoded record. Computation
/// timestamps recovered as elapsed - delays get sub-tolerance negatives
/// clamped to zero and sub-tolerance dips monotonized, since both are
/// artifacts of 3-decimal rounding; larger violations stay and fail
/// validation.
inline Trace record_to_trace(const LogRecord& rec) {
  Trace trace;
  trace.id = std::to_string(rec.index);

  if (rec.segment_durations) {
    double sum = 0.0;
    for (double d : *rec.segment_durations) {
      trace.segments.push_back({d});
      sum += d;
    }
    if (std::fabs(sum - rec.source_length) > kBoundaryToleranceMs)
      throw SchemaError("segment durations sum to " + std::to_string(sum) +
                        " ms but source_length is " +
                        std::to_string(rec.source_length) + " ms");
  } else if (rec.segment_ms) {
    const double seg = *rec.segment_ms;
    if (!(seg > 0.0))
      throw SchemaError("segment_ms must be positive");
    double acc = 0.0;
    while (acc + seg <= rec.source_length - kBoundaryToleranceMs) {
      trace.segments.push_back({seg});
      acc += seg;
    }
    if (rec.source_length - acc > kBoundaryToleranceMs)
      trace.segments.push_back({rec.source_length - acc});
  } else {
    // Infer boundaries from the distinct delay values, completed to the
    // stated source length.
    std::vector<double> boundaries;
    for (double d : rec.delays)
      if (d > kBoundaryToleranceMs &&
          (boundaries.empty() ||
           d - boundaries.back() > kBoundaryToleranceMs))
        boundaries.push_back(d);
    if (boundaries.empty() ||
        rec.source_length - boundaries.back() > kBoundaryToleranceMs)
      boundaries.push_back(rec.source_length);
    double prev = 0.0;
    for (double b : boundaries) {
      trace.segments.push_back({b - prev});
      prev = b;
    }
  }

  std::vector<std::string> words;
  if (rec.prediction) words = detail::split_whitespace(*rec.prediction);

  double prev_c = 0.0;
  for (std::size_t i = 0; i < rec.delays.size(); ++i) {
    TokenEvent token;
    token.index = static_cast<int>(i) + 1;
    if (!words.empty()) token.text = words[i];
    token.cu_delay_ms = rec.delays[i];
    double c = rec.computation ? (*rec.computation)[i]
                               : rec.elapsed[i] - rec.delays[i];
    if (!rec.computation) {
      if (c < 0.0 && c >= -kBoundaryToleranceMs) c = 0.0;
      if (c < prev_c && prev_c - c <= kBoundaryToleranceMs) c = prev_c;
    }
    token.computation_ts_ms = c;
    prev_c = c;
    trace.tokens.push_back(std::move(token));
  }

  trace.reference_length = 1;
  if (rec.reference) {
    const auto ref_words = detail::split_whitespace(*rec.reference);
    trace.reference_length = std::max<std::size_t>(1, ref_words.size());
  }

  validate_trace(trace);
  return trace;
}

struct SkippedRecord {
  std::size_t line = 0;
  std::string reason;
};

struct ReadLogResult {
  std::vector<Trace> traces;
  std::vector<SkippedRecord> skipped;
};

/// Reads a whole log stream, one record per non-empty line, preserving
/// order. Strict mode (the default) rethrows the first bad line; lenient
/// mode collects bad lines into `skipped` and keeps going. Memory stays
/// constant per record during parsing.
inline ReadLogResult read_log(std::istream& in, bool lenient = false) {
  ReadLogResult result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      LogRecord rec = parse_record(line, line_no);
      if (rec.index < 0) rec.index = static_cast<int>(result.traces.size());
      result.traces.push_back(record_to_trace(rec));
    } catch (const std::runtime_error& e) {
      if (!lenient) throw;
      result.skipped.push_back({line_no, e.what()});
    }
  }
  return result;
}

/// Serializes one validated trace as a log line. The computation field is
/// always written explicitly; ms values carry exactly 3 decimals.
/// `fallback_index` is used when the trace id is not a decimal integer.
inline std::string serialize_record(const Trace& trace, int fallback_index) {
  int index = fallback_index;
  if (!trace.id.empty()) {
    try {
      std::size_t consumed = 0;
      const int parsed = std::stoi(trace.id, &consumed);
      if (consumed == trace.id.size()) index = parsed;
    } catch (const std::exception&) {
      // non-numeric id: keep the stream position
    }
  }

  std::vector<double> delays, elapsed, computation, durations;
  delays.reserve(trace.tokens.size());
  bool all_texts = !trace.tokens.empty();
  std::string prediction;
  for (const TokenEvent& t : trace.tokens) {
    delays.push_back(t.cu_delay_ms);
    elapsed.push_back(t.cu_delay_ms + t.computation_ts_ms);
    computation.push_back(t.computation_ts_ms);
    if (!t.text || t.text->empty()) {
      all_texts = false;
    } else if (t.text->find_first_of(" \t\r\n") != std::string::npos) {
      throw SchemaError("token text '" + *t.text +
                        "' contains whitespace and cannot be logged");
    } else if (all_texts) {
      if (!prediction.empty()) prediction += ' ';
      prediction += *t.text;
    }
  }
  for (const SourceSegment& s : trace.segments)
    durations.push_back(s.duration_ms);

  std::string line = "{\"index\":" + std::to_string(index);
  if (all_texts)
    line += ",\"prediction\":" + nlohmann::json(prediction).dump();
  line += ",\"delays\":";
  detail::append_ms_array(line, delays);
  line += ",\"elapsed\":";
  detail::append_ms_array(line, elapsed);
  line += ",\"computation\":";
  detail::append_ms_array(line, computation);
  line += ",\"source_length\":" + detail::format_ms(trace.total_source_ms());
  line += ",\"segment_durations\":";
  detail::append_ms_array(line, durations);

  std::string reference;
  for (int i = 0; i < trace.reference_length; ++i) {
    if (i) reference += ' ';
    reference += 'w';
  }
  line += ",\"reference\":" + nlohmann::json(reference).dump();
  line += '}';
  return line;
}

/// Writes one line per trace and returns the number written.
/// I/O failures name the instance that hit them.
inline std::size_t write_log(const std::vector<Trace>& traces,
                             std::ostream& out) {
  std::size_t written = 0;
  for (const Trace& trace : traces) {
    out << serialize_record(trace, static_cast<int>(written)) << '\n';
    if (!out)
      throw std::runtime_error("I/O failure writing record for instance '" +
                               trace.id + "'");
    ++written;
  }
  return written;
}

}  // namespace simulag
