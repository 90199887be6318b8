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
//
// Acceptance gate for the toolkit. Each criterion prints one line; the
// process exit code is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "simulag/simulag.hpp"
#include "test_support.hpp"

using namespace simulag;
using namespace test_support;

namespace {

int g_failures = 0;

void report(int criterion, bool ok, const std::string& detail) {
  std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", criterion,
              detail.c_str());
  if (!ok) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

double max_abs_diff(const std::vector<double>& a,
                    const std::vector<double>& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::fabs(a[i] - b[i]));
  return worst;
}

std::string format_detail(const char* fmt, double x, double y = 0.0) {
  char buffer[256];
  std::snprintf(buffer, sizeof buffer, fmt, x, y);
  return buffer;
}

// ---- criterion 1: golden per-token delays, exact and fast ----

void criterion_1() {
  const Trace golden = golden_trace();
  const std::vector<double> want_ca = {1500, 2000, 3500, 4000, 5500, 6000};
  const std::vector<double> want_star = {1500, 2000, 2500, 3000, 3500, 4000};
  const std::vector<double> want_cu = {1000, 1000, 2000, 2000, 3000, 3000};

  // warm-up pass so the timed run measures computation, not page faults
  (void)ca_star_delays(golden);

  const auto start = std::chrono::steady_clock::now();
  const std::vector<double> cu = cu_delays(golden).values_ms;
  const std::vector<double> ca = legacy_ca_delays(golden).values_ms;
  const std::vector<double> star = ca_star_delays(golden).values_ms;
  const double elapsed_ms = seconds_since(start) * 1000.0;

  const double worst = std::max({max_abs_diff(cu, want_cu),
                                 max_abs_diff(ca, want_ca),
                                 max_abs_diff(star, want_star)});
  report(1, worst <= 1e-9 && elapsed_ms < 1.0,
         format_detail("golden delays, worst error %.2e ms in %.4f ms", worst,
                       elapsed_ms));
}

// ---- criteria 2 and 3: simulated policies against the wall clock ----

struct SimCase {
  Trace trace;
  std::vector<double> emission;
  double compute_ms;  // constant per-token compute, negative for uniform
};

std::vector<SimCase> build_policy_suite() {
  std::vector<SimCase> suite;
  SplitMix64 rng(20260819);
  int counter = 0;
  for (int rep = 0; rep < 25; ++rep) {
    for (int k = 1; k <= 8; ++k) {
      for (int n = 1; n <= 5; ++n) {
        const int segments = next_int(rng, std::max(4, k), 400);
        std::vector<double> durations(static_cast<std::size_t>(segments));
        for (double& d : durations) d = rng.next_in(100.0, 2000.0);

        const bool constant = (counter++ % 2) == 0;
        ComputeModel compute =
            constant
                ? ComputeModel::constant(rng.next_in(0.0, 1000.0))
                : ComputeModel::seeded_uniform(rng.next_in(0.0, 200.0),
                                               rng.next_in(200.0, 1000.0),
                                               rng.next());
        PolicySpec policy{PolicyKind::WaitKStrideN, k, n,
                          next_int(rng, 0, 3)};
        SimulationOutcome out = simulate(durations, policy, compute);
        suite.push_back({std::move(out.trace), std::move(out.emission_wall_ms),
                         constant ? compute.constant_ms : -1.0});
      }
    }
  }
  return suite;
}

void criteria_2_and_3(const std::vector<SimCase>& suite) {
  const auto start = std::chrono::steady_clock::now();

  double worst_truth = 0.0;
  double worst_oracle = 0.0;
  double worst_replay = 0.0;
  for (const SimCase& c : suite) {
    const std::vector<double> star = ca_star_delays(c.trace).values_ms;
    worst_truth = std::max(worst_truth, max_abs_diff(star, c.emission));
    worst_oracle =
        std::max(worst_oracle, max_abs_diff(star, wall_clock_oracle(c.trace)));
    worst_replay =
        std::max(worst_replay, max_abs_diff(star, replay_emission(c.trace)));
  }
  const double elapsed = seconds_since(start);
  const double worst =
      std::max({worst_truth, worst_oracle, worst_replay});
  {
    char buffer[256];
    std::snprintf(buffer, sizeof buffer,
                  "%zu policy instances, worst |CA* - truth| %.2e ms in %.2f s",
                  suite.size(), worst, elapsed);
    report(2, suite.size() >= 1000 && worst <= 1e-6 && elapsed < 10.0, buffer);
  }

  // legacy CA never undershoots the wall clock, and its overshoot grows
  // strictly under concatenation whenever per-token compute is positive
  double worst_gap = std::numeric_limits<double>::infinity();
  bool growth_ok = true;
  int growth_cases = 0;
  for (const SimCase& c : suite) {
    const double ca_last = legacy_ca_delays(c.trace).values_ms.back();
    worst_gap = std::min(worst_gap, ca_last - c.emission.back());

    if (c.compute_ms > 0.0 && growth_cases < 200) {
      ++growth_cases;
      double previous_gap = -1.0;
      for (int repeats = 1; repeats <= 4; ++repeats) {
        const Trace scaled = concat_scale(c.trace, repeats);
        const double gap = legacy_ca_delays(scaled).values_ms.back() -
                           wall_clock_oracle(scaled).back();
        if (gap <= previous_gap) growth_ok = false;
        previous_gap = gap;
      }
    }
  }
  {
    char buffer[256];
    std::snprintf(buffer, sizeof buffer,
                  "CA - truth >= 0 (min gap %.2e ms), gap strictly grows over "
                  "%d concatenated cases: %s",
                  worst_gap, growth_cases, growth_ok ? "yes" : "no");
    report(3, worst_gap >= -1e-9 && growth_ok && growth_cases >= 100, buffer);
  }
}

// ---- criterion 4: LAAL behavior under corpus concatenation ----

void criterion_4() {
  const std::vector<double> durations(100, 250.0);
  const PolicySpec policy{PolicyKind::WaitKStrideN, 4, 3, 0};
  const SimulationOutcome base =
      simulate(durations, policy, ComputeModel::constant(30.0));

  std::vector<double> cu_laal, ca_laal, star_laal;
  for (int repeats = 1; repeats <= 4; ++repeats) {
    const Trace scaled = concat_scale(base.trace, repeats);
    const LatencyReport scored =
        evaluate_instance(scaled, {Mode::CU, Mode::CA, Mode::CA_STAR});
    cu_laal.push_back(scored.metrics.at(Mode::CU)->laal_ms);
    ca_laal.push_back(scored.metrics.at(Mode::CA)->laal_ms);
    star_laal.push_back(scored.metrics.at(Mode::CA_STAR)->laal_ms);
  }

  double cu_drift = 0.0, star_drift = 0.0;
  bool ca_grows = true;
  for (std::size_t r = 1; r < 4; ++r) {
    cu_drift = std::max(
        cu_drift, std::fabs(cu_laal[r] - cu_laal[0]) / std::fabs(cu_laal[0]));
    star_drift = std::max(star_drift, std::fabs(star_laal[r] - star_laal[0]) /
                                          std::fabs(star_laal[0]));
    if (ca_laal[r] <= ca_laal[r - 1]) ca_grows = false;
  }

  char buffer[256];
  std::snprintf(buffer, sizeof buffer,
                "repeats 1-4: CU LAAL drift %.3f%%, CA* drift %.3f%%, CA "
                "grows: %s",
                cu_drift * 100.0, star_drift * 100.0, ca_grows ? "yes" : "no");
  report(4, cu_drift <= 0.01 && star_drift <= 0.05 && ca_grows, buffer);
}

// ---- criterion 5: structural invariants over random traces ----

void criterion_5() {
  const auto start = std::chrono::steady_clock::now();
  SplitMix64 rng(5150);
  const int rounds = 1200;
  int failures = 0;
  double worst = 0.0;

  for (int round = 0; round < rounds; ++round) {
    const Trace trace = random_trace(rng);
    const std::vector<double> cu = cu_delays(trace).values_ms;
    const std::vector<double> ca = legacy_ca_delays(trace).values_ms;
    const std::vector<double> star = ca_star_delays(trace).values_ms;

    // CU <= CA* <= CA per token
    for (std::size_t i = 0; i < star.size(); ++i) {
      if (star[i] < cu[i] - 1e-9 || ca[i] < star[i] - 1e-9) ++failures;
      worst = std::max({worst, cu[i] - star[i], star[i] - ca[i]});
    }

    // CA* collapses onto CU without computation
    const Trace flat = with_zero_computation(trace);
    if (max_abs_diff(ca_star_delays(flat).values_ms,
                     cu_delays(flat).values_ms) > 1e-9)
      ++failures;

    // time-scale equivariance; powers of two stay exact
    for (const double alpha : {0.5, 2.0}) {
      std::vector<double> expected = star;
      for (double& v : expected) v *= alpha;
      if (ca_star_delays(scale_trace(trace, alpha)).values_ms != expected)
        ++failures;
    }
    {
      const std::vector<double> scaled =
          ca_star_delays(scale_trace(trace, 1000.0)).values_ms;
      for (std::size_t i = 0; i < star.size(); ++i)
        if (std::fabs(scaled[i] - 1000.0 * star[i]) >
            1e-9 * std::max(1.0, std::fabs(1000.0 * star[i])))
          ++failures;
    }

    // buffers start at zero and never go negative; CA* is nondecreasing
    const BlockStructure blocks = derive_blocks(trace);
    if (!blocks.buffers_ms.empty() && blocks.buffers_ms.front() != 0.0)
      ++failures;
    for (const double b : blocks.buffers_ms)
      if (b < 0.0) ++failures;
    for (std::size_t i = 1; i < star.size(); ++i)
      if (star[i] < star[i - 1] - 1e-9) ++failures;
  }

  const double elapsed = seconds_since(start);
  char buffer[256];
  std::snprintf(buffer, sizeof buffer,
                "%d random traces, %d invariant violations in %.2f s", rounds,
                failures, elapsed);
  report(5, failures == 0 && elapsed < 10.0, buffer);
}

// ---- criterion 6: aggregate metric fixtures ----

void criterion_6() {
  const Trace golden = golden_trace();
  const LatencyReport scored =
      evaluate_instance(golden, {Mode::CU, Mode::CA, Mode::CA_STAR});

  const double al_cu = scored.metrics.at(Mode::CU)->al_ms;
  const double al_star = scored.metrics.at(Mode::CA_STAR)->al_ms;
  const double al_ca = scored.metrics.at(Mode::CA)->al_ms;

  bool fixtures_ok = std::fabs(al_cu - 800.0) <= 1e-9 &&
                     std::fabs(al_star - 1500.0) <= 1e-9 &&
                     std::fabs(al_ca - 1833.3) <= 0.1;

  // LAAL falls back to AL whenever the reference covers the hypothesis
  bool laal_matches = true;
  for (const Mode mode : {Mode::CU, Mode::CA, Mode::CA_STAR})
    if (std::fabs(scored.metrics.at(mode)->al_ms -
                  scored.metrics.at(mode)->laal_ms) > 1e-9)
      laal_matches = false;

  SplitMix64 rng(606);
  GenOptions options;
  options.reference_covers_hypothesis = true;
  for (int round = 0; round < 200; ++round) {
    const Trace trace = random_trace(rng, options);
    const LatencyReport r = evaluate_instance(trace, {Mode::CA_STAR});
    const auto& m = r.metrics.at(Mode::CA_STAR);
    if (!m || std::fabs(m->al_ms - m->laal_ms) > 1e-9) laal_matches = false;
  }

  char buffer[256];
  std::snprintf(buffer, sizeof buffer,
                "AL fixtures CU %.3f / CA* %.3f / CA %.3f, AL==LAAL under "
                "covering references: %s",
                al_cu, al_star, al_ca, laal_matches ? "yes" : "no");
  report(6, fixtures_ok && laal_matches, buffer);
}

// ---- criterion 7: log round trip and strict/lenient handling ----

void criterion_7(const std::vector<SimCase>& suite) {
  SplitMix64 rng(707);
  std::vector<Trace> corpus;
  for (int i = 0; i < 500; ++i) corpus.push_back(random_trace(rng));
  for (std::size_t i = 0; i < suite.size() && corpus.size() < 1000; i += 2)
    corpus.push_back(suite[i].trace);

  double worst = 0.0;
  bool shapes_ok = true;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    corpus[i].id = std::to_string(i);
    std::ostringstream out;
    write_log({corpus[i]}, out);
    std::istringstream in(out.str());
    const ReadLogResult back = read_log(in, false);
    if (back.traces.size() != 1 || !back.skipped.empty()) {
      shapes_ok = false;
      continue;
    }
    const Trace& echo = back.traces[0];
    if (echo.tokens.size() != corpus[i].tokens.size() ||
        echo.segments.size() != corpus[i].segments.size() ||
        echo.reference_length != corpus[i].reference_length) {
      shapes_ok = false;
      continue;
    }
    for (std::size_t t = 0; t < echo.tokens.size(); ++t) {
      worst = std::max(worst, std::fabs(echo.tokens[t].cu_delay_ms -
                                        corpus[i].tokens[t].cu_delay_ms));
      worst = std::max(worst,
                       std::fabs(echo.tokens[t].computation_ts_ms -
                                 corpus[i].tokens[t].computation_ts_ms));
    }
    for (std::size_t s = 0; s < echo.segments.size(); ++s)
      worst = std::max(worst, std::fabs(echo.segments[s].duration_ms -
                                        corpus[i].segments[s].duration_ms));
  }

  // strict runs refuse a corrupt line; lenient runs skip and keep going
  TempDir dir;
  std::ostringstream log;
  write_log({corpus[0]}, log);
  write_file(dir.file("mixed.jsonl"), log.str() + "{\"broken\": true}\n");

  // the CLI reports the corrupt line on stderr by design; keep it out of
  // the acceptance transcript
  std::ostringstream captured;
  std::streambuf* previous = std::cerr.rdbuf(captured.rdbuf());

  RunConfig strict;
  strict.inputs = {dir.file("mixed.jsonl")};
  strict.output = dir.file("strict.csv");
  const bool strict_ok = cmd_evaluate(strict) == kExitData;

  RunConfig lenient = strict;
  lenient.lenient = true;
  lenient.output = dir.file("lenient.csv");
  const bool lenient_ok =
      cmd_evaluate(lenient) == kExitOk &&
      read_file(dir.file("lenient.csv")).find("# skipped=1") !=
          std::string::npos;

  std::cerr.rdbuf(previous);

  char buffer[256];
  std::snprintf(buffer, sizeof buffer,
                "%zu traces round-trip, worst field error %.2e ms, "
                "strict/lenient exits: %s/%s",
                corpus.size(), worst, strict_ok ? "ok" : "bad",
                lenient_ok ? "ok" : "bad");
  report(7, corpus.size() >= 1000 && shapes_ok && worst <= 5e-4 && strict_ok &&
                lenient_ok,
         buffer);
}

}  // namespace

int main() {
  criterion_1();
  const std::vector<SimCase> suite = build_policy_suite();
  criteria_2_and_3(suite);
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7(suite);
  if (g_failures == 0)
    std::printf("all acceptance criteria passed\n");
  else
    std::printf("%d acceptance criteria failed\n", g_failures);
  return g_failures;
}
