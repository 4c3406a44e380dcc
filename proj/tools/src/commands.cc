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

#include "attmot/cli/commands.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>

#include "attmot/cli/checks.h"
#include "attmot/cli/parallel.h"
#include "attmot/motio.h"
#include "attmot/synthgen.h"

namespace attmot::cli {
namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RunError("cannot write " + path.string());
  return out;
}

std::vector<std::filesystem::path> require_sequences(const std::filesystem::path& bench) {
  if (!std::filesystem::is_directory(bench)) {
    throw RunError("benchmark directory not found: " + bench.string());
  }
  auto dirs = synth::sequence_dirs(bench);
  if (dirs.empty()) throw RunError("no seq-* directories in " + bench.string());
  return dirs;
}

std::string seed_dir(std::uint64_t seed) { return "seed-" + std::to_string(seed); }

}  // namespace

std::vector<std::filesystem::path> cmd_generate(const GenerateOptions& options, std::ostream& log) {
  const auto world = options.config.empty() ? synth::WorldConfig{}
                                            : synth::WorldConfig::load(options.config);
  world.validate();
  const auto dirs = synth::generate_benchmark(world, options.out);
  log << "wrote " << dirs.size() << " sequences to " << options.out.string() << '\n';
  return dirs;
}

fusion::TrainResult cmd_train(const TrainOptions& options, std::ostream& log) {
  fusion::TrainConfig config;
  if (!options.config.empty()) {
    config = fusion::TrainConfig::from_doc(KeyValueDoc::load(options.config, "train"));
  }
  config.seed = options.seed;
  config.validate();
  const auto strategy = fusion::FusionStrategy::parse(options.strategy);
  require_sequences(options.benchmark);
  const auto samples = synth::load_benchmark_samples(options.benchmark, options.samples);
  if (samples.empty()) throw RunError("benchmark has no training crops");
  const auto result = fusion::train(samples, config, strategy);
  {
    auto out = open_out(options.out);
    result.params.save(out);
  }
  if (!options.trace.empty()) {
    auto out = open_out(options.trace);
    fusion::write_loss_trace(out, result.trace);
  }
  log << "trained " << strategy.to_string() << " on " << samples.size() << " crops, loss "
      << motio::format_real(result.trace.front().total) << " -> "
      << motio::format_real(result.trace.back().total) << '\n';
  return result;
}

void track_benchmark(const std::filesystem::path& benchmark, const assoc::AssocConfig& config,
                     const fusion::FusionParams* params, const std::filesystem::path& out,
                     int jobs) {
  config.validate();
  const auto dirs = require_sequences(benchmark);
  std::filesystem::create_directories(out);
  parallel_for(dirs.size(), jobs, [&](std::size_t i) {
    const auto input = assoc::load_sequence_input(dirs[i]);
    const auto tracks = assoc::run_sequence(input, config, params);
    auto file = open_out(out / (dirs[i].filename().string() + ".txt"));
    motio::write_result_file(file, tracks);
  });
}

void cmd_track(const TrackOptions& options, std::ostream& log) {
  assoc::AssocConfig config;
  if (!options.config.empty()) config = assoc::AssocConfig::load(options.config);
  if (!options.mode.empty()) config.mode = assoc::parse_cost_mode(options.mode);
  if (!options.attr_source.empty()) config.attr_source = assoc::parse_attr_source(options.attr_source);
  config.validate();
  std::optional<fusion::FusionParams> params;
  if (!options.params.empty()) params = fusion::FusionParams::load_file(options.params.string());
  if (config.needs_fusion() && !params) {
    throw ConfigError("mode " + assoc::to_string(config.mode) +
                      " with predicted attributes needs --params");
  }
  track_benchmark(options.benchmark, config, params ? &*params : nullptr, options.out, options.jobs);
  log << "tracked " << synth::sequence_dirs(options.benchmark).size() << " sequences with mode "
      << assoc::to_string(config.mode) << " into " << options.out.string() << '\n';
}

metrics::MetricsReport evaluate_benchmark(const std::filesystem::path& gt,
                                          const std::filesystem::path& res,
                                          const metrics::EvalOptions& options, int jobs) {
  const auto dirs = require_sequences(gt);
  std::vector<metrics::SequenceMetrics> rows(dirs.size());
  parallel_for(dirs.size(), jobs, [&](std::size_t i) {
    const std::string name = dirs[i].filename().string();
    const auto result_path = res / (name + ".txt");
    if (!std::filesystem::exists(result_path)) {
      throw RunError("missing result file " + result_path.string());
    }
    const auto truth = motio::load_gt_file((dirs[i] / "gt.txt").string());
    const auto pred = motio::load_result_file(result_path.string());
    rows[i] = metrics::evaluate(name, truth, pred, options);
  });
  return metrics::make_report(std::move(rows));
}

metrics::MetricsReport cmd_eval(const EvalOptions& options, std::ostream& log) {
  metrics::EvalOptions eo;
  eo.iou_threshold = options.iou_threshold;
  eo.suppress_ignored = !options.keep_ignored;
  if (!(eo.iou_threshold > 0.0 && eo.iou_threshold <= 1.0)) {
    throw ConfigError("--iou must lie in (0, 1]");
  }
  const auto report = evaluate_benchmark(options.gt, options.res, eo, options.jobs);
  if (!options.out.empty()) {
    auto out = open_out(options.out);
    metrics::write_report_csv(out, report);
  }
  metrics::write_report_table(log, report);
  return report;
}

std::map<std::string, double> aggregate_values(const metrics::MetricsReport& report) {
  const auto& t = report.total;
  const double mota = t.clear.gt > 0 ? t.clear.mota() : 0.0;
  return {{"MOTA", mota},
          {"FN", static_cast<double>(t.clear.fn)},
          {"FP", static_cast<double>(t.clear.fp)},
          {"IDs", static_cast<double>(t.clear.idsw)},
          {"HOTA", t.hota.hota()},
          {"AssA", t.hota.assa()},
          {"IDR", t.id.idr()},
          {"IDP", t.id.idp()},
          {"IDF1", t.id.idf1()},
          {"DetA", t.hota.deta()},
          {"GT", static_cast<double>(t.clear.gt)}};
}

std::map<std::string, double> median_values(const std::vector<std::map<std::string, double>>& runs) {
  std::map<std::string, double> out;
  if (runs.empty()) return out;
  for (const auto& column : ablation_columns()) {
    std::vector<double> v;
    for (const auto& r : runs) v.push_back(r.at(column));
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    out[column] = n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  }
  return out;
}

std::vector<AblationRow> cmd_ablate(const ExperimentSpec& spec, const std::filesystem::path& out,
                                    int jobs, std::ostream& log) {
  spec.validate();
  if (!spec.benchmark.empty()) require_sequences(spec.benchmark);
  std::filesystem::create_directories(out);
  for (const auto& v : spec.variants) {
    auto f = open_out(out / "runs" / v.label / "assoc.cfg");
    v.config.to_doc().write(f);
  }

  std::vector<std::vector<std::map<std::string, double>>> per_variant(spec.variants.size());
  for (const std::uint64_t seed : spec.seeds) {
    std::filesystem::path bench = spec.benchmark;
    if (spec.has_world) {
      auto world = spec.world;
      world.seed = seed;
      bench = out / "bench" / seed_dir(seed);
      std::filesystem::remove_all(bench);
      synth::generate_benchmark(world, bench);
    }
    std::optional<fusion::FusionParams> params;
    if (spec.needs_training()) {
      auto config = spec.train;
      config.seed = seed;
      const auto samples = synth::load_benchmark_samples(bench, spec.train_samples);
      if (samples.empty()) throw RunError("seed " + std::to_string(seed) + ": no training crops");
      params = fusion::train(samples, config, spec.strategy).params;
      auto f = open_out(out / "params" / (seed_dir(seed) + ".bin"));
      params->save(f);
    }
    for (std::size_t k = 0; k < spec.variants.size(); ++k) {
      const auto& v = spec.variants[k];
      const auto run_dir = out / "runs" / v.label / seed_dir(seed);
      try {
        track_benchmark(bench, v.config, params ? &*params : nullptr, run_dir, jobs);
        const auto report = evaluate_benchmark(bench, run_dir, metrics::EvalOptions{}, jobs);
        auto f = open_out(out / "runs" / v.label / (seed_dir(seed) + ".csv"));
        metrics::write_report_csv(f, report);
        per_variant[k].push_back(aggregate_values(report));
      } catch (const std::exception& e) {
        throw RunError("variant " + v.label + ", seed " + std::to_string(seed) + ": " + e.what());
      }
      log << "done " << v.label << " seed " << seed << '\n';
    }
  }

  std::vector<AblationRow> rows;
  for (std::size_t k = 0; k < spec.variants.size(); ++k) {
    rows.push_back({spec.variants[k].label, median_values(per_variant[k])});
  }
  auto f = open_out(out / "ablation.csv");
  write_ablation_csv(f, rows);
  write_ablation_table(log, rows);
  return rows;
}

void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows) {
  out << "variant";
  for (const auto& c : ablation_columns()) out << ',' << c;
  out << '\n';
  for (const auto& r : rows) {
    out << r.variant;
    for (const auto& c : ablation_columns()) out << ',' << motio::format_real(r.values.at(c));
    out << '\n';
  }
}

void write_ablation_table(std::ostream& out, const std::vector<AblationRow>& rows) {
  std::size_t width = 7;
  for (const auto& r : rows) width = std::max(width, r.variant.size());
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-*s %7s %8s %8s %7s %6s %6s %6s %6s %6s\n",
                static_cast<int>(width), "variant", "MOTA", "FN", "FP", "IDs", "HOTA", "AssA",
                "IDR", "IDP", "IDF1");
  out << buf;
  for (const auto& r : rows) {
    const auto& v = r.values;
    std::snprintf(buf, sizeof(buf), "%-*s %7.1f %8.1f %8.1f %7.1f %6.1f %6.1f %6.1f %6.1f %6.1f\n",
                  static_cast<int>(width), r.variant.c_str(), 100.0 * v.at("MOTA"), v.at("FN"),
                  v.at("FP"), v.at("IDs"), 100.0 * v.at("HOTA"), 100.0 * v.at("AssA"),
                  100.0 * v.at("IDR"), 100.0 * v.at("IDP"), 100.0 * v.at("IDF1"));
    out << buf;
  }
}

bool cmd_verify(const VerifyOptions& options, std::ostream& log) {
  const auto scratch = options.scratch.empty()
                           ? std::filesystem::temp_directory_path() / "attmot-verify"
                           : options.scratch;
  bool all = true;
  int ran = 0;
  for (const auto& check : checks::all_checks(scratch)) {
    if (!options.only.empty() &&
        std::find(options.only.begin(), options.only.end(), check.id) == options.only.end()) {
      continue;
    }
    checks::CheckResult r;
    try {
      r = check.run();
    } catch (const std::exception& e) {
      r = {check.id, check.name, false, std::string("threw: ") + e.what(), 0.0};
    }
    log << checks::format_result(r) << '\n' << std::flush;
    all = all && r.pass;
    ++ran;
  }
  if (ran == 0) throw ConfigError("no checks selected");
  return all;
}

}  // namespace attmot::cli
