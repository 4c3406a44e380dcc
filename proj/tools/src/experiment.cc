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

#include "attmot/cli/experiment.h"

#include <set>

namespace attmot::cli {
namespace {

bool starts_with(const std::string& s, const std::string& prefix) {
  return s.compare(0, prefix.size(), prefix) == 0;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  const std::filesystem::path p(value);
  return p.is_absolute() || base.empty() ? p : base / p;
}

}  // namespace

bool ExperimentSpec::needs_training() const {
  for (const auto& v : variants) {
    if (v.config.needs_fusion()) return true;
  }
  return false;
}

void ExperimentSpec::validate() const {
  if (variants.empty()) throw ConfigError("no variants");
  if (seeds.empty()) throw ConfigError("no seeds");
  if (benchmark.empty() == !has_world) {
    throw ConfigError("experiment needs exactly one of 'benchmark' and 'world'");
  }
  std::set<std::string> labels;
  for (const auto& v : variants) {
    if (!labels.insert(v.label).second) throw ConfigError("duplicate variant: " + v.label);
    v.config.validate();
  }
  if (has_world) world.validate();
  strategy.validate();
  train.validate();
}

ExperimentSpec ExperimentSpec::from_doc(const KeyValueDoc& doc,
                                        const std::filesystem::path& base_dir) {
  ExperimentSpec s;
  const std::set<std::string> plain = {"benchmark", "world", "seeds", "variants", "strategy",
                                       "train_samples"};
  std::vector<std::string> labels;
  if (doc.has("variants")) labels = doc.get_list("variants");
  const std::set<std::string> label_set(labels.begin(), labels.end());

  KeyValueDoc world_doc("world", 1);
  KeyValueDoc train_doc("train", 1);
  for (const auto& [key, value] : doc.entries()) {
    if (plain.count(key)) continue;
    if (starts_with(key, "world.")) {
      world_doc.set(key.substr(6), value);
    } else if (starts_with(key, "train.")) {
      train_doc.set(key.substr(6), value);
    } else if (starts_with(key, "variant.")) {
      // The label may itself contain dots, so match against the declared
      // labels.
      bool found = false;
      for (const auto& label : labels) {
        if (starts_with(key, "variant." + label + ".") && key.size() > 9 + label.size()) {
          found = true;
          break;
        }
      }
      if (!found) throw ConfigError("override for undeclared variant: " + key);
    } else {
      throw ConfigError("unknown key: " + key);
    }
  }

  if (doc.has("benchmark")) s.benchmark = resolve(base_dir, doc.get_string("benchmark", ""));
  if (doc.has("world") || !world_doc.entries().empty()) {
    s.has_world = true;
    KeyValueDoc merged("world", 1);
    if (doc.has("world")) {
      merged = KeyValueDoc::load(resolve(base_dir, doc.get_string("world", "")).string(), "world");
    }
    for (const auto& [k, v] : world_doc.entries()) merged.set(k, v);
    s.world = synth::WorldConfig::from_doc(merged);
  }
  for (const auto& item : doc.get_list("seeds")) {
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      s.seeds.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError("seeds: not an unsigned integer: " + item);
    }
  }
  if (doc.has("strategy")) s.strategy = fusion::FusionStrategy::parse(doc.get_string("strategy", ""));
  s.train = fusion::TrainConfig::from_doc(train_doc);
  s.train_samples = static_cast<std::size_t>(doc.get_uint("train_samples", s.train_samples));

  for (const auto& label : labels) {
    KeyValueDoc v("assoc", 1);
    try {
      v.set("mode", assoc::to_string(assoc::parse_cost_mode(label)));
    } catch (const ConfigError&) {
    }
    const std::string prefix = "variant." + label + ".";
    for (const auto& [key, value] : doc.entries()) {
      if (starts_with(key, prefix)) v.set(key.substr(prefix.size()), value);
    }
    if (!v.has("mode")) throw ConfigError("variant " + label + " has no mode");
    try {
      s.variants.push_back({label, assoc::AssocConfig::from_doc(v)});
    } catch (const ConfigError& e) {
      throw ConfigError("variant " + label + ": " + e.what());
    }
  }
  s.validate();
  return s;
}

ExperimentSpec ExperimentSpec::load(const std::string& path) {
  const auto doc = KeyValueDoc::load(path, "experiment");
  return from_doc(doc, std::filesystem::path(path).parent_path());
}

}  // namespace attmot::cli
