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

#ifndef ATTMOT_CLI_EXPERIMENT_H_
#define ATTMOT_CLI_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "attmot/fusion.h"
#include "attmot/keyvalue.h"
#include "attmot/synthgen.h"
#include "attmot/tracker.h"

namespace attmot::cli {

struct Variant {
  std::string label;
  assoc::AssocConfig config;
};

// An ablation run. Either `benchmark` names an existing benchmark directory
// that every seed reuses (seeds then only change fusion training), or `world`
// is set and each seed generates its own benchmark with world.seed = seed.
//
//   # attmot-experiment v1
//   world = occlusion_heavy.cfg
//   seeds = 1, 2, 3
//   variants = embed, embed+attr
//   variant.embed+attr.attr_source = predicted
//   strategy = preproc-attr
//   train.iterations = 300
//   train_samples = 5000
//
// A variant label that names a cost mode sets that mode unless overridden by
// variant.<label>.mode. Other variant.<label>.<key> entries override keys of
// the assoc config document. Relative paths resolve against the spec file.
struct ExperimentSpec {
  std::filesystem::path benchmark;
  bool has_world = false;
  synth::WorldConfig world;
  std::vector<std::uint64_t> seeds;
  std::vector<Variant> variants;
  fusion::FusionStrategy strategy;
  fusion::TrainConfig train;
  std::size_t train_samples = 5000;  // crops drawn for training, 0 for all

  bool needs_training() const;
  // Throws ConfigError on an empty variant or seed list, duplicate labels, or
  // neither/both of benchmark and world.
  void validate() const;
  static ExperimentSpec from_doc(const KeyValueDoc& doc,
                                 const std::filesystem::path& base_dir = {});
  static ExperimentSpec load(const std::string& path);
};

}  // namespace attmot::cli

#endif  // ATTMOT_CLI_EXPERIMENT_H_
