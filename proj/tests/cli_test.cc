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

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <gtest/gtest.h>

#include "attmot/cli/commands.h"
#include "attmot/cli/experiment.h"
#include "attmot/cli/parallel.h"
#include "attmot/motio.h"

namespace attmot::cli {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("attmot-cli-test-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

KeyValueDoc small_experiment() {
  KeyValueDoc doc("experiment", 1);
  doc.set("world.n_sequences", "2");
  doc.set("world.n_identities", "5");
  doc.set("world.n_frames", "40");
  doc.set("world.embed_dim", "32");
  doc.set("seeds", "3");
  doc.set("variants", "embed");
  return doc;
}

TEST(Parallel, RunsEveryIndexOnce) {
  for (int jobs : {1, 3}) {
    std::vector<int> hits(50, 0);
    parallel_for(hits.size(), jobs, [&](std::size_t i) { ++hits[i]; });
    for (int h : hits) EXPECT_EQ(h, 1);
  }
}

TEST(Parallel, RethrowsLowestFailingIndex) {
  for (int jobs : {1, 4}) {
    std::atomic<int> done{0};
    try {
      parallel_for(20, jobs, [&](std::size_t i) {
        ++done;
        if (i == 7 || i == 13) throw std::runtime_error("task " + std::to_string(i));
      });
      FAIL();
    } catch (const std::runtime_error& e) {
      EXPECT_STREQ(e.what(), "task 7");
    }
    EXPECT_GE(done.load(), 8);
  }
}

TEST(Experiment, Errors) {
  auto doc = small_experiment();
  doc.set("variants", "");
  EXPECT_THROW(ExperimentSpec::from_doc(doc), ConfigError);

  doc = small_experiment();
  doc.set("seeds", "");
  EXPECT_THROW(ExperimentSpec::from_doc(doc), ConfigError);

  doc = small_experiment();
  doc.set("variants", "embed, embed");
  EXPECT_THROW(ExperimentSpec::from_doc(doc), ConfigError);

  doc = small_experiment();
  doc.set("benchmark", "somewhere");
  EXPECT_THROW(ExperimentSpec::from_doc(doc), ConfigError);

  doc = small_experiment();
  doc.set("variants", "mine");
  EXPECT_THROW(ExperimentSpec::from_doc(doc), ConfigError);
  doc.set("variant.mine.mode", "attr");
  EXPECT_EQ(ExperimentSpec::from_doc(doc).variants[0].config.mode, assoc::CostMode::kAttr);

  doc = small_experiment();
  doc.set("variant.other.lambda_a", "2");
  EXPECT_THROW(ExperimentSpec::from_doc(doc), ConfigError);

  doc = small_experiment();
  doc.set("seeds", "1, x");
  EXPECT_THROW(ExperimentSpec::from_doc(doc), ConfigError);

  try {
    ExperimentSpec s;
    s.seeds = {1};
    s.has_world = true;
    s.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_STREQ(e.what(), "no variants");
  }
}

TEST(Experiment, VariantOverrides) {
  auto doc = small_experiment();
  doc.set("variants", "embed, embed+attr");
  doc.set("variant.embed+attr.lambda_a", "2.5");
  doc.set("variant.embed+attr.attr_source", "predicted");
  doc.set("train.iterations", "7");
  const auto s = ExperimentSpec::from_doc(doc);
  ASSERT_EQ(s.variants.size(), 2u);
  EXPECT_EQ(s.variants[1].config.mode, assoc::CostMode::kEmbedPlusAttr);
  EXPECT_EQ(s.variants[1].config.lambda_a, 2.5);
  EXPECT_TRUE(s.needs_training());
  EXPECT_EQ(s.train.iterations, 7);
  EXPECT_EQ(s.world.n_identities, 5);
}

TEST(Generate, InvalidWorldWritesNothing) {
  const auto dir = scratch("gen");
  synth::WorldConfig w;
  w.n_frames = 0;
  {
    std::ofstream out(dir / "w.cfg");
    w.to_doc().write(out);
  }
  std::ostringstream log;
  EXPECT_ANY_THROW(cmd_generate({(dir / "w.cfg").string(), dir / "bench"}, log));
  EXPECT_FALSE(fs::exists(dir / "bench"));
}

TEST(Ablate, SingleRunMatchesTrackAndEval) {
  const auto dir = scratch("single");
  const auto spec = ExperimentSpec::from_doc(small_experiment());
  std::ostringstream log;
  const auto rows = cmd_ablate(spec, dir / "out", 1, log);
  ASSERT_EQ(rows.size(), 1u);

  auto world = spec.world;
  world.seed = 3;
  synth::generate_benchmark(world, dir / "bench");
  track_benchmark(dir / "bench", spec.variants[0].config, nullptr, dir / "res", 1);
  const auto report = evaluate_benchmark(dir / "bench", dir / "res", {}, 1);
  EXPECT_EQ(rows[0].values, aggregate_values(report));
  for (const auto& seq : synth::sequence_dirs(dir / "bench")) {
    const auto name = seq.filename().string() + ".txt";
    EXPECT_EQ(slurp(dir / "res" / name), slurp(dir / "out/runs/embed/seed-3" / name)) << name;
  }
}

std::map<std::string, double> aggregate_from_csv(const fs::path& path) {
  std::ifstream in(path);
  std::string header, line;
  std::getline(in, header);
  while (std::getline(in, line)) {
    if (line.rfind("AGGREGATE,", 0) != 0) continue;
    std::map<std::string, double> values;
    std::istringstream h(header), l(line);
    std::string key, value;
    std::getline(h, key, ',');
    std::getline(l, value, ',');
    while (std::getline(h, key, ',') && std::getline(l, value, ',')) values[key] = std::stod(value);
    return values;
  }
  return {};
}

TEST(Ablate, ParallelMatchesSerialAndReaggregates) {
  auto doc = small_experiment();
  doc.set("seeds", "1, 2, 3");
  doc.set("variants", "iou, embed, embed+attr");
  const auto spec = ExperimentSpec::from_doc(doc);
  const auto dir = scratch("ablate");
  std::ostringstream log;
  const auto serial = cmd_ablate(spec, dir / "serial", 1, log);
  const auto parallel = cmd_ablate(spec, dir / "parallel", 3, log);
  ASSERT_EQ(serial.size(), 3u);
  EXPECT_EQ(slurp(dir / "serial/ablation.csv"), slurp(dir / "parallel/ablation.csv"));
  for (const auto& v : spec.variants) {
    for (auto s : spec.seeds) {
      const auto csv = fs::path("runs") / v.label / ("seed-" + std::to_string(s) + ".csv");
      EXPECT_EQ(slurp(dir / "serial" / csv), slurp(dir / "parallel" / csv)) << csv;
    }
  }
  for (const auto& row : serial) {
    std::vector<std::map<std::string, double>> runs;
    for (auto s : spec.seeds) {
      runs.push_back(aggregate_from_csv(dir / "serial/runs" / row.variant /
                                        ("seed-" + std::to_string(s) + ".csv")));
    }
    EXPECT_EQ(median_values(runs), row.values) << row.variant;
  }
}

TEST(Ablate, TrainsWhenPredictedAttributesAreUsed) {
  auto doc = small_experiment();
  doc.set("variants", "attr");
  doc.set("variant.attr.attr_source", "predicted");
  doc.set("train.iterations", "3");
  doc.set("train_samples", "100");
  const auto spec = ExperimentSpec::from_doc(doc);
  const auto dir = scratch("train");
  std::ostringstream log;
  cmd_ablate(spec, dir, 1, log);
  EXPECT_TRUE(fs::exists(dir / "params/seed-3.bin"));
  EXPECT_TRUE(fs::exists(dir / "ablation.csv"));
}

TEST(Median, EvenAndOdd) {
  auto run = [](double idf1) {
    std::map<std::string, double> r;
    for (const auto& c : ablation_columns()) r[c] = 0.0;
    r["IDF1"] = idf1;
    return r;
  };
  EXPECT_EQ(median_values({run(1), run(5), run(2)}).at("IDF1"), 2.0);
  EXPECT_EQ(median_values({run(1), run(4)}).at("IDF1"), 2.5);
}

TEST(Track, PredictedAttributesNeedParams) {
  const auto dir = scratch("track");
  synth::WorldConfig w;
  w.n_identities = 3;
  w.n_frames = 10;
  w.embed_dim = 16;
  synth::generate_benchmark(w, dir / "bench");
  TrackOptions options;
  options.benchmark = dir / "bench";
  options.mode = "attr";
  options.attr_source = "predicted";
  options.out = dir / "res";
  std::ostringstream log;
  EXPECT_THROW(cmd_track(options, log), ConfigError);
}

TEST(Eval, MissingResultFile) {
  const auto dir = scratch("eval");
  synth::WorldConfig w;
  w.n_identities = 3;
  w.n_frames = 10;
  w.embed_dim = 16;
  synth::generate_benchmark(w, dir / "bench");
  fs::create_directories(dir / "res");
  EXPECT_THROW(evaluate_benchmark(dir / "bench", dir / "res", {}, 1), RunError);
}

}  // namespace
}  // namespace attmot::cli
