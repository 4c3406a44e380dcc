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

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "attmot/cli/commands.h"
#include "attmot/motio.h"
#include "attmot/synthgen.h"

namespace {

using namespace attmot;

// Prints a default config document and makes the subcommand exit early.
void add_defaults_flag(CLI::App* sub, bool* flag) {
  sub->add_flag("--print-defaults", *flag, "Print the default config document and exit");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"attmot: attribute-assisted multi-object tracking on synthetic benchmarks"};
  app.require_subcommand(1);
  int jobs = 1;
  app.add_option("-j,--jobs", jobs, "Worker threads for per-sequence work")
      ->capture_default_str()
      ->check(CLI::Range(1, 256));

  cli::GenerateOptions gen;
  bool gen_defaults = false;
  auto* generate = app.add_subcommand("generate", "Write a synthetic benchmark");
  generate->add_option("-c,--config", gen.config, "World config (attmot-world v1)");
  generate->add_option("-o,--out", gen.out, "Output benchmark directory");
  add_defaults_flag(generate, &gen_defaults);

  cli::TrainOptions train;
  bool train_defaults = false;
  auto* train_cmd = app.add_subcommand("train", "Train the attribute fusion head");
  train_cmd->add_option("-b,--bench", train.benchmark, "Benchmark directory");
  train_cmd->add_option("-c,--config", train.config, "Train config (attmot-train v1)");
  train_cmd->add_option("--strategy", train.strategy,
                        "cross-fertilize[:r] | self-enhance[:r] | attr-only | preproc-attr | "
                        "preproc-both | concat-then-self")
      ->capture_default_str();
  train_cmd->add_option("--seed", train.seed, "Training seed")->capture_default_str();
  train_cmd->add_option("--samples", train.samples, "Crops used for training, 0 for all")
      ->capture_default_str();
  train_cmd->add_option("-o,--out", train.out, "Output parameter file");
  train_cmd->add_option("--trace", train.trace, "Optional loss trace CSV");
  add_defaults_flag(train_cmd, &train_defaults);

  cli::TrackOptions track;
  bool track_defaults = false;
  auto* track_cmd = app.add_subcommand("track", "Run the tracker over a benchmark");
  track_cmd->add_option("-b,--bench", track.benchmark, "Benchmark directory");
  track_cmd->add_option("-c,--config", track.config, "Assoc config (attmot-assoc v1)");
  track_cmd->add_option("--mode", track.mode, "iou | embed | attr | embed+attr | concat");
  track_cmd->add_option("--attr-source", track.attr_source, "observed | predicted");
  track_cmd->add_option("--params", track.params, "Fusion parameters from 'train'");
  track_cmd->add_option("-o,--out", track.out, "Output directory for <sequence>.txt");
  add_defaults_flag(track_cmd, &track_defaults);

  cli::EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Score result files against ground truth");
  eval_cmd->add_option("--gt", eval.gt, "Benchmark directory")->required();
  eval_cmd->add_option("--res", eval.res, "Directory of <sequence>.txt result files")->required();
  eval_cmd->add_option("-o,--out", eval.out, "Report CSV");
  eval_cmd->add_option("--iou", eval.iou_threshold, "IoU threshold for a match")
      ->capture_default_str();
  eval_cmd->add_flag("--keep-ignored", eval.keep_ignored,
                     "Count predictions on inactive GT rows as false positives");

  std::string spec_path;
  std::filesystem::path ablate_out;
  auto* ablate = app.add_subcommand("ablate", "Run an experiment spec (attmot-experiment v1)");
  ablate->add_option("-s,--spec", spec_path, "Experiment spec")->required();
  ablate->add_option("-o,--out", ablate_out, "Output directory")->required();

  cli::VerifyOptions verify;
  auto* verify_cmd = app.add_subcommand("verify", "Run the invariant and oracle suite");
  verify_cmd->add_option("--only", verify.only, "Check ids to run (1-9)")->check(CLI::Range(1, 9));
  verify_cmd->add_option("--scratch", verify.scratch, "Scratch directory for file checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  auto need = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("missing required option ") + what);
  };

  try {
    if (generate->parsed()) {
      if (gen_defaults) {
        synth::WorldConfig{}.to_doc().write(std::cout);
        return 0;
      }
      need(!gen.out.empty(), "--out");
      cli::cmd_generate(gen, std::cout);
    } else if (train_cmd->parsed()) {
      if (train_defaults) {
        fusion::TrainConfig{}.to_doc().write(std::cout);
        return 0;
      }
      need(!train.benchmark.empty(), "--bench");
      need(!train.out.empty(), "--out");
      cli::cmd_train(train, std::cout);
    } else if (track_cmd->parsed()) {
      if (track_defaults) {
        assoc::AssocConfig{}.to_doc().write(std::cout);
        return 0;
      }
      need(!track.benchmark.empty(), "--bench");
      need(!track.out.empty(), "--out");
      track.jobs = jobs;
      cli::cmd_track(track, std::cout);
    } else if (eval_cmd->parsed()) {
      eval.jobs = jobs;
      cli::cmd_eval(eval, std::cout);
    } else if (ablate->parsed()) {
      const auto spec = cli::ExperimentSpec::load(spec_path);
      cli::cmd_ablate(spec, ablate_out, jobs, std::cout);
    } else if (verify_cmd->parsed()) {
      return cli::cmd_verify(verify, std::cout) ? 0 : 2;
    }
  } catch (const ConfigError& e) {
    std::cerr << "attmot: " << e.what() << '\n';
    return 1;
  } catch (const InvariantError& e) {
    std::cerr << "attmot: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "attmot: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
