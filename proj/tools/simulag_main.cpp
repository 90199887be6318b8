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

#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "simulag/simulag.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Latency evaluation for simultaneous speech translation"};
  app.require_subcommand(1);

  simulag::RunConfig config;
  std::string modes_flag;
  std::string metrics_flag;
  std::string policy_flag;
  std::string compute_flag;
  std::string repeats_flag;
  std::string format_flag;

  const auto add_report_flags = [&](CLI::App* cmd) {
    cmd->add_option("--input", config.inputs, "Input log file(s)")
        ->required();
    cmd->add_option("--output", config.output,
                    "Report path (default: stdout)");
    cmd->add_option("--modes", modes_flag,
                    "Delay modes, comma-separated: CU,CA,CA* (default all)");
    cmd->add_option("--metrics", metrics_flag,
                    "Metric variants: AL,LAAL (default both)");
    cmd->add_option("--format", format_flag, "Report format: csv or records");
    cmd->add_flag("--lenient", config.lenient,
                  "Skip malformed records instead of failing");
    cmd->add_option("--workers", config.workers,
                    "Worker threads, 0 = hardware concurrency");
    cmd->add_flag("--deterministic", config.deterministic,
                  "Single-threaded, byte-stable output");
  };

  CLI::App* evaluate =
      app.add_subcommand("evaluate", "Score a log: per-instance AL/LAAL rows "
                                     "plus corpus means");
  add_report_flags(evaluate);

  CLI::App* simulate = app.add_subcommand(
      "simulate", "Generate wait-k stride-n traces with a ground-truth "
                  "emission sidecar");
  simulate->add_option("--output", config.output, "Log path to write")
      ->required();
  simulate->add_option("--policy", policy_flag,
                       "Wait-k stride-n as k,n or k,n,tail (default 1,1)");
  simulate->add_option("--segment-ms", config.segment_ms,
                       "Segment duration in ms (default 250)");
  simulate->add_option("--segments", config.segments,
                       "Number of source segments (default 100)");
  simulate->add_option("--compute", compute_flag,
                       "Per-token compute: constant:<ms> or uniform:<lo>,<hi> "
                       "(default constant:0)");
  simulate->add_option("--seed", config.seed,
                       "Base seed; instance i uses seed + i (default 1)");
  simulate->add_option("--instances", config.instances,
                       "Number of traces to simulate (default 1)");
  simulate->add_option("--workers", config.workers,
                       "Worker threads, 0 = hardware concurrency");
  simulate->add_flag("--deterministic", config.deterministic,
                     "Single-threaded, byte-stable output");

  CLI::App* scale = app.add_subcommand(
      "scale-study", "Tile a corpus by repeat factors and tabulate metric "
                     "growth per mode");
  add_report_flags(scale);
  scale->add_option("--repeats", repeats_flag,
                    "Ascending repeat factors, e.g. 1,2,3,4 (default)");

  CLI::App* compare = app.add_subcommand(
      "compare", "Corpus-mean AL/LAAL table across CU, CA and CA*");
  add_report_flags(compare);
  compare->add_option("--dump-delays", config.dump_delays,
                      "Also write per-token delays to this CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? simulag::kExitOk : simulag::kExitUsage;
  }

  if (evaluate->parsed()) config.command = simulag::Command::Evaluate;
  if (simulate->parsed()) config.command = simulag::Command::Simulate;
  if (scale->parsed()) config.command = simulag::Command::ScaleStudy;
  if (compare->parsed()) config.command = simulag::Command::Compare;

  try {
    if (!modes_flag.empty()) config.modes = simulag::parse_modes(modes_flag);
    if (!metrics_flag.empty())
      config.metrics = simulag::parse_metrics(metrics_flag);
    if (!policy_flag.empty())
      config.policy = simulag::parse_policy(policy_flag);
    if (!compute_flag.empty())
      config.compute = simulag::parse_compute(compute_flag);
    if (!repeats_flag.empty())
      config.repeats = simulag::parse_repeats(repeats_flag);
    if (!format_flag.empty()) {
      const std::string format = simulag::detail::lower(format_flag);
      if (format == "csv") {
        config.format = simulag::OutputFormat::Csv;
      } else if (format == "records") {
        config.format = simulag::OutputFormat::Records;
      } else {
        throw std::invalid_argument("--format must be csv or records, got '" +
                                    format_flag + "'");
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return simulag::kExitUsage;
  }

  return simulag::run_command(config);
}
