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

// The shipped configs must stay in sync with the compiled defaults.

#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>

#include "attmot/cli/experiment.h"
#include "attmot/fusion.h"
#include "attmot/synthgen.h"
#include "attmot/tracker.h"

namespace attmot {
namespace {

const std::filesystem::path kConfigs = std::filesystem::path(ATTMOT_SOURCE_DIR) / "configs";

std::string text(const KeyValueDoc& doc) {
  std::ostringstream s;
  doc.write(s);
  return s.str();
}

TEST(Configs, WorldDefault) {
  const auto w = synth::WorldConfig::load((kConfigs / "world_default.cfg").string());
  EXPECT_EQ(text(w.to_doc()), text(synth::WorldConfig{}.to_doc()));
}

TEST(Configs, OcclusionHeavy) {
  const auto w = synth::WorldConfig::load((kConfigs / "occlusion_heavy.cfg").string());
  EXPECT_EQ(text(w.to_doc()), text(synth::WorldConfig::occlusion_heavy().to_doc()));
}

TEST(Configs, AssocDefault) {
  const auto a = assoc::AssocConfig::load((kConfigs / "assoc_default.cfg").string());
  EXPECT_EQ(text(a.to_doc()), text(assoc::AssocConfig{}.to_doc()));
}

TEST(Configs, TrainDefault) {
  const auto doc = KeyValueDoc::load((kConfigs / "train_default.cfg").string(), "train");
  EXPECT_EQ(text(fusion::TrainConfig::from_doc(doc).to_doc()), text(fusion::TrainConfig{}.to_doc()));
}

TEST(Configs, AblationSpecLoads) {
  const auto s = cli::ExperimentSpec::load((kConfigs / "ablation_occlusion.cfg").string());
  EXPECT_TRUE(s.has_world);
  EXPECT_GE(s.variants.size(), 2u);
  EXPECT_FALSE(s.seeds.empty());
}

}  // namespace
}  // namespace attmot
