// Copyright 2026 The attmot Authors.
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

#ifndef ATTMOT_CLI_COMMANDS_H_
#define ATTMOT_CLI_COMMANDS_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "attmot/cli/experiment.h"
#include "attmot/fusion.h"
#include "attmot/metrics.h"
#include "attmot/tracker.h"

namespace attmot::cli {

// Failure of a command after its inputs were accepted. Maps to exit code 2.
class RunError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GenerateOptions {
  std::string config;  // world config; empty for the defaults
  std::filesystem::path out;
};
std::vector<std::filesystem::path> cmd_generate(const GenerateOptions& options, std::ostream& log);

struct TrainOptions {
  std::filesystem::path benchmark;
  std::string config;  // train config; empty for the defaults
  std::string strategy = "preproc-attr";
  std::uint64_t seed = 1;
  std::size_t samples = 5000;  // 0 for every crop
  std::filesystem::path out;
  std::filesystem::path trace;  // loss trace CSV, optional
};
fusion::TrainResult cmd_train(const TrainOptions& options, std::ostream& log);

struct TrackOptions {
  std::filesystem::path benchmark;
  std::string config;  // assoc config; empty for the defaults
  std::string mode;    // overrides the config when set
  std::string attr_source;
  std::filesystem::path params;
  std::filesystem::path out;
  int jobs = 1;
};
void cmd_track(const TrackOptions& options, std::ostream& log);

// Tracks every sequence of `benchmark` into out/<sequence>.txt.
void track_benchmark(const std::filesystem::path& benchmark, const assoc::AssocConfig& config,
                     const fusion::FusionParams* params, const std::filesystem::path& out,
                     int jobs);

struct EvalOptions {
  std::filesystem::path gt;   // benchmark directory
  std::filesystem::path res;  // directory of <sequence>.txt result files
  std::filesystem::path out;  // report CSV, optional
  double iou_threshold = 0.5;
  bool keep_ignored = false;
  int jobs = 1;
};
metrics::MetricsReport cmd_eval(const EvalOptions& options, std::ostream& log);

metrics::MetricsReport evaluate_benchmark(const std::filesystem::path& gt,
                                          const std::filesystem::path& res,
                                          const metrics::EvalOptions& options, int jobs);

// One row per variant: medians over seeds of the AGGREGATE row of each run.
struct AblationRow {
  std::string variant;
  std::map<std::string, double> values;  // keyed by report column
};

inline const std::vector<std::string>& ablation_columns() {
  static const std::vector<std::string> kColumns = {"MOTA", "FN",  "FP",  "IDs",  "HOTA", "AssA",
                                                    "IDR",  "IDP", "IDF1", "DetA", "GT"};
  return kColumns;
}

// The AGGREGATE row of a report as column -> value.
std::map<std::string, double> aggregate_values(const metrics::MetricsReport& report);
// Medians of each column, for re-aggregating per-run reports.
std::map<std::string, double> median_values(const std::vector<std::map<std::string, double>>& runs);

// Writes out/runs/<variant>/seed-<s>/ result files, out/runs/<variant>/seed-<s>.csv,
// out/runs/<variant>/assoc.cfg and out/ablation.csv. Benchmarks
// generated from a world config go to out/bench/seed-<s>, fusion parameters to
// out/params/seed-<s>.bin.
std::vector<AblationRow> cmd_ablate(const ExperimentSpec& spec, const std::filesystem::path& out,
                                    int jobs, std::ostream& log);

void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows);
void write_ablation_table(std::ostream& out, const std::vector<AblationRow>& rows);

struct VerifyOptions {
  std::vector<int> only;  // empty runs every check
  std::filesystem::path scratch;
};
// Prints one PASS/FAIL line per check; returns true if all passed.
bool cmd_verify(const VerifyOptions& options, std::ostream& log);

}  // namespace attmot::cli

#endif  // ATTMOT_CLI_COMMANDS_H_
