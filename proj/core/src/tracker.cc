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

#include "attmot/tracker.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "attmot/distances.h"
#include "attmot/motio.h"

namespace attmot::assoc {
namespace {

constexpr std::array<std::pair<CostMode, std::string_view>, 5> kModeNames = {{
    {CostMode::kIoU, "iou"},
    {CostMode::kEmbed, "embed"},
    {CostMode::kAttr, "attr"},
    {CostMode::kEmbedPlusAttr, "embed+attr"},
    {CostMode::kConcatFeature, "concat"},
}};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

Eigen::VectorXd unit(const Eigen::VectorXd& v) {
  const double n = v.norm();
  if (!(n > 0.0)) throw InvariantError("degenerate embedding");
  return v / n;
}

void min_max_normalize(Eigen::MatrixXd& m) {
  const double lo = m.minCoeff();
  const double span = m.maxCoeff() - lo;
  if (span > 0.0) {
    m = (m.array() - lo) / span;
  } else {
    m.setZero();
  }
}

}  // namespace

std::string to_string(CostMode mode) {
  for (const auto& [m, name] : kModeNames) {
    if (m == mode) return std::string(name);
  }
  return "unknown";
}

CostMode parse_cost_mode(std::string_view text) {
  const std::string t = lower(text);
  for (const auto& [m, name] : kModeNames) {
    if (t == name) return m;
  }
  if (t == "embedplusattr" || t == "embed_plus_attr") return CostMode::kEmbedPlusAttr;
  if (t == "concatfeature" || t == "concat_feature") return CostMode::kConcatFeature;
  throw ConfigError("unknown cost mode: " + std::string(text));
}

std::string to_string(AttrSource source) {
  return source == AttrSource::kObserved ? "observed" : "predicted";
}

AttrSource parse_attr_source(std::string_view text) {
  const std::string t = lower(text);
  if (t == "observed") return AttrSource::kObserved;
  if (t == "predicted") return AttrSource::kPredicted;
  throw ConfigError("unknown attribute source: " + std::string(text));
}

double AssocConfig::match_threshold() const {
  switch (mode) {
    case CostMode::kIoU: return iou_threshold;
    case CostMode::kEmbed: return embed_threshold;
    case CostMode::kAttr: return attr_threshold;
    case CostMode::kEmbedPlusAttr: return combined_threshold;
    case CostMode::kConcatFeature: return concat_threshold;
  }
  return embed_threshold;
}

bool AssocConfig::uses_embedding() const {
  return mode == CostMode::kEmbed || mode == CostMode::kEmbedPlusAttr ||
         mode == CostMode::kConcatFeature;
}

bool AssocConfig::uses_attributes() const {
  return mode == CostMode::kAttr || mode == CostMode::kEmbedPlusAttr ||
         mode == CostMode::kConcatFeature;
}

bool AssocConfig::needs_fusion() const {
  return uses_attributes() && attr_source == AttrSource::kPredicted;
}

void AssocConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ConfigError(std::string(name) + " must be positive");
    }
  };
  positive(gating_threshold, "gating_threshold");
  positive(iou_threshold, "iou_threshold");
  positive(embed_threshold, "embed_threshold");
  positive(attr_threshold, "attr_threshold");
  positive(combined_threshold, "combined_threshold");
  positive(concat_threshold, "concat_threshold");
  if (!(lambda_e >= 0.0) || !(lambda_a >= 0.0) || !std::isfinite(lambda_e) ||
      !std::isfinite(lambda_a)) {
    throw ConfigError("lambda weights must be nonnegative");
  }
  if (mode == CostMode::kEmbedPlusAttr && !(lambda_e + lambda_a > 0.0)) {
    throw ConfigError("lambda_e + lambda_a must be positive");
  }
  if (n_init < 1) throw ConfigError("n_init must be >= 1");
  if (max_age < 0) throw ConfigError("max_age must be >= 0");
  if (budget < 1) throw ConfigError("budget must be >= 1");
  if (!(attr_ema >= 0.0 && attr_ema < 1.0)) throw ConfigError("attr_ema must be in [0,1)");
  positive(kalman.std_weight_position, "kalman.std_weight_position");
  positive(kalman.std_weight_velocity, "kalman.std_weight_velocity");
}

KeyValueDoc AssocConfig::to_doc() const {
  using motio::format_real;
  KeyValueDoc d("assoc", 1);
  d.set("mode", to_string(mode));
  d.set("lambda_e", format_real(lambda_e));
  d.set("lambda_a", format_real(lambda_a));
  d.set("gating_threshold", format_real(gating_threshold));
  d.set("iou_threshold", format_real(iou_threshold));
  d.set("embed_threshold", format_real(embed_threshold));
  d.set("attr_threshold", format_real(attr_threshold));
  d.set("combined_threshold", format_real(combined_threshold));
  d.set("concat_threshold", format_real(concat_threshold));
  d.set("n_init", std::to_string(n_init));
  d.set("max_age", std::to_string(max_age));
  d.set("budget", std::to_string(budget));
  d.set("attr_ema", format_real(attr_ema));
  d.set("attr_source", to_string(attr_source));
  d.set("normalize_costs", normalize_costs ? "true" : "false");
  d.set("binarize_attributes", binarize_attributes ? "true" : "false");
  d.set("emit_coasting", emit_coasting ? "true" : "false");
  d.set("backfill", backfill ? "true" : "false");
  d.set("kalman.std_weight_position", format_real(kalman.std_weight_position));
  d.set("kalman.std_weight_velocity", format_real(kalman.std_weight_velocity));
  return d;
}

AssocConfig AssocConfig::from_doc(const KeyValueDoc& d) {
  AssocConfig c;
  std::set<std::string> known;
  const KeyValueDoc defaults = c.to_doc();
  for (const auto& [k, v] : defaults.entries()) known.insert(k);
  d.require_known(known);
  if (d.has("mode")) c.mode = parse_cost_mode(d.get_string("mode", ""));
  c.lambda_e = d.get_double("lambda_e", c.lambda_e);
  c.lambda_a = d.get_double("lambda_a", c.lambda_a);
  c.gating_threshold = d.get_double("gating_threshold", c.gating_threshold);
  c.iou_threshold = d.get_double("iou_threshold", c.iou_threshold);
  c.embed_threshold = d.get_double("embed_threshold", c.embed_threshold);
  c.attr_threshold = d.get_double("attr_threshold", c.attr_threshold);
  c.combined_threshold = d.get_double("combined_threshold", c.combined_threshold);
  c.concat_threshold = d.get_double("concat_threshold", c.concat_threshold);
  c.n_init = static_cast<int>(d.get_int("n_init", c.n_init));
  c.max_age = static_cast<int>(d.get_int("max_age", c.max_age));
  c.budget = static_cast<int>(d.get_int("budget", c.budget));
  c.attr_ema = d.get_double("attr_ema", c.attr_ema);
  if (d.has("attr_source")) c.attr_source = parse_attr_source(d.get_string("attr_source", ""));
  c.normalize_costs = d.get_bool("normalize_costs", c.normalize_costs);
  c.binarize_attributes = d.get_bool("binarize_attributes", c.binarize_attributes);
  c.emit_coasting = d.get_bool("emit_coasting", c.emit_coasting);
  c.backfill = d.get_bool("backfill", c.backfill);
  c.kalman.std_weight_position =
      d.get_double("kalman.std_weight_position", c.kalman.std_weight_position);
  c.kalman.std_weight_velocity =
      d.get_double("kalman.std_weight_velocity", c.kalman.std_weight_velocity);
  c.validate();
  return c;
}

AssocConfig AssocConfig::load(const std::string& path) {
  return from_doc(KeyValueDoc::load(path, "assoc"));
}

std::vector<DetFeatures> detection_features(std::span<const Detection> dets,
                                            const AssocConfig& config,
                                            const fusion::FusionParams* params) {
  std::vector<DetFeatures> out(dets.size());
  if (config.mode == CostMode::kIoU) return out;
  const bool need_embedding = config.uses_embedding() || config.needs_fusion();
  for (const Detection& d : dets) {
    if (need_embedding && !d.has_features()) {
      throw InvariantError("detection at frame " + std::to_string(d.frame) +
                           " has no embedding");
    }
  }
  std::vector<AttributeVector> attrs;
  attrs.reserve(dets.size());
  if (config.needs_fusion()) {
    if (params == nullptr) {
      throw ConfigError("cost mode " + to_string(config.mode) +
                        " with predicted attributes needs fusion parameters");
    }
    std::vector<Embedding> e1;
    std::vector<AttributeVector> a1;
    for (const Detection& d : dets) {
      e1.push_back(d.embedding);
      a1.push_back(d.attr_obs);
    }
    for (auto& p : fusion::predict_batch(e1, a1, params->strategy, *params)) {
      attrs.push_back(std::move(p.attributes));
    }
  } else {
    for (const Detection& d : dets) attrs.push_back(d.attr_obs.as_prob());
  }
  for (std::size_t j = 0; j < dets.size(); ++j) {
    out[j].attributes = attrs[j];
    if (config.mode == CostMode::kConcatFeature) {
      out[j].feature = unit(fusion::fuse_for_association(dets[j].embedding, attrs[j]).values());
    } else if (config.uses_embedding()) {
      out[j].feature = unit(dets[j].embedding.values());
    }
  }
  return out;
}

namespace {

AttributeVector round_half(const AttributeVector& a) {
  AttributeVector::Values v{};
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = a[k] >= 0.5 ? 1.0 : 0.0;
  return AttributeVector::prob(v);
}

double attr_cost(const AttributeVector& track, const AttributeVector& det, bool binarize) {
  return binarize ? attribute_distance(round_half(track), round_half(det))
                  : attribute_distance(track, det);
}

}  // namespace

Eigen::MatrixXd mode_cost(std::span<const Track> tracks, std::span<const Detection> dets,
                          std::span<const DetFeatures> features, CostMode mode,
                          const AssocConfig& config) {
  const auto n = static_cast<Eigen::Index>(tracks.size());
  const auto m = static_cast<Eigen::Index>(dets.size());
  Eigen::MatrixXd c(n, m);
  if (n == 0 || m == 0) return c;
  switch (mode) {
    case CostMode::kIoU:
      for (Eigen::Index i = 0; i < n; ++i) {
        const BBox tb = box_of(tracks[static_cast<std::size_t>(i)].state);
        for (Eigen::Index j = 0; j < m; ++j) {
          c(i, j) = 1.0 - iou(tb, dets[static_cast<std::size_t>(j)].box);
        }
      }
      return c;
    case CostMode::kAttr:
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
          c(i, j) = attr_cost(tracks[static_cast<std::size_t>(i)].attr_estimate,
                              features[static_cast<std::size_t>(j)].attributes,
                              config.binarize_attributes);
        }
      }
      return c;
    case CostMode::kEmbed:
    case CostMode::kConcatFeature: {
      const auto dim = features[0].feature.size();
      Eigen::MatrixXd det_mat(dim, m);
      for (Eigen::Index j = 0; j < m; ++j) {
        const auto& f = features[static_cast<std::size_t>(j)].feature;
        if (f.size() != dim) throw InvariantError("feature dimension mismatch");
        det_mat.col(j) = f;
      }
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto& gallery = tracks[static_cast<std::size_t>(i)].gallery;
        if (gallery.empty()) throw InvariantError("track has an empty feature gallery");
        Eigen::MatrixXd g(dim, static_cast<Eigen::Index>(gallery.size()));
        for (std::size_t k = 0; k < gallery.size(); ++k) {
          if (gallery[k].size() != dim) throw InvariantError("feature dimension mismatch");
          g.col(static_cast<Eigen::Index>(k)) = gallery[k];
        }
        const Eigen::MatrixXd sim = g.transpose() * det_mat;
        for (Eigen::Index j = 0; j < m; ++j) {
          c(i, j) = std::clamp(1.0 - sim.col(j).maxCoeff(), 0.0, 2.0);
        }
      }
      return c;
    }
    case CostMode::kEmbedPlusAttr: {
      Eigen::MatrixXd e = mode_cost(tracks, dets, features, CostMode::kEmbed, config);
      Eigen::MatrixXd a = mode_cost(tracks, dets, features, CostMode::kAttr, config);
      if (config.normalize_costs) {
        min_max_normalize(e);
        min_max_normalize(a);
      }
      return config.lambda_e * e.array() + config.lambda_a * a.array();
    }
  }
  return c;
}

namespace {

BoolMatrix gate(std::span<const Track> tracks, std::span<const Detection> dets,
                const AssocConfig& config) {
  BoolMatrix out = BoolMatrix::Constant(static_cast<Eigen::Index>(tracks.size()),
                                        static_cast<Eigen::Index>(dets.size()), false);
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    const Projection p = kalman_project(tracks[i].state, config.kalman);
    for (std::size_t j = 0; j < dets.size(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          mahalanobis_squared(p.mean, p.covariance, measurement_of(dets[j].box)) >
          config.gating_threshold;
    }
  }
  return out;
}

}  // namespace

CostMatrix build_cost_matrix(std::span<const Track> tracks, std::span<const Detection> dets,
                             const AssocConfig& config, const fusion::FusionParams* params) {
  const auto features = detection_features(dets, config, params);
  return {mode_cost(tracks, dets, features, config.mode, config), gate(tracks, dets, config)};
}

namespace {

TrackOutput output_of(const Track& t, const Detection& d) {
  return {d.frame, t.identity, d.box, d.confidence};
}

void absorb(Track& t, const Detection& d, const DetFeatures& f, const AssocConfig& config) {
  t.state = kalman_update(t.state, d.box, config.kalman);
  t.hits += 1;
  t.time_since_update = 0;
  if (f.feature.size() != 0) {
    t.gallery.push_back(f.feature);
    while (t.gallery.size() > static_cast<std::size_t>(config.budget)) t.gallery.pop_front();
  }
  if (config.uses_attributes()) {
    AttributeVector::Values v{};
    for (std::size_t k = 0; k < attr::kCount; ++k) {
      v[k] = std::clamp(config.attr_ema * t.attr_estimate[k] +
                            (1.0 - config.attr_ema) * f.attributes[k],
                        0.0, 1.0);
    }
    t.attr_estimate = AttributeVector::prob(v);
  }
}

}  // namespace

std::vector<TrackOutput> tracker_step(TrackerState& state, std::span<const Detection> dets,
                                      const AssocConfig& config,
                                      const fusion::FusionParams* params) {
  state.frame += 1;
  for (const Detection& d : dets) {
    require_valid(d);
    if (d.frame != state.frame) {
      throw InvariantError("tracker_step expected frame " + std::to_string(state.frame) +
                           ", got " + std::to_string(d.frame));
    }
  }
  for (Track& t : state.tracks) {
    t.state = kalman_predict(t.state, config.kalman);
    t.age += 1;
  }

  const auto features = detection_features(dets, config, params);
  const CostMatrix cm{mode_cost(state.tracks, dets, features, config.mode, config),
                      gate(state.tracks, dets, config)};
  const Assignment a = solve_assignment(cm.cost, cm.infeasible, config.match_threshold());

  std::vector<TrackOutput> out;
  for (const auto& [i, j] : a.matches) {
    Track& t = state.tracks[static_cast<std::size_t>(i)];
    const Detection& d = dets[static_cast<std::size_t>(j)];
    absorb(t, d, features[static_cast<std::size_t>(j)], config);
    if (t.status == TrackStatus::kTentative) {
      if (t.hits >= config.n_init) {
        t.status = TrackStatus::kConfirmed;
        if (config.backfill) out.insert(out.end(), t.pending.begin(), t.pending.end());
        t.pending.clear();
      } else {
        t.pending.push_back(output_of(t, d));
      }
    }
    if (t.status == TrackStatus::kConfirmed) out.push_back(output_of(t, d));
  }
  for (int i : a.unmatched_rows) {
    Track& t = state.tracks[static_cast<std::size_t>(i)];
    t.time_since_update += 1;
    if (t.status == TrackStatus::kTentative || t.time_since_update > config.max_age) {
      t.status = TrackStatus::kLost;
    } else if (config.emit_coasting) {
      out.push_back({state.frame, t.identity, box_of(t.state), 0.0});
    }
  }
  std::erase_if(state.tracks, [](const Track& t) { return t.status == TrackStatus::kLost; });

  for (int j : a.unmatched_cols) {
    const Detection& d = dets[static_cast<std::size_t>(j)];
    const DetFeatures& f = features[static_cast<std::size_t>(j)];
    Track t;
    t.identity = state.next_identity++;
    t.state = kalman_init(d.box, config.kalman);
    t.hits = 1;
    t.age = 1;
    if (f.feature.size() != 0) t.gallery.push_back(f.feature);
    t.attr_estimate = f.attributes;
    if (t.hits >= config.n_init) {
      t.status = TrackStatus::kConfirmed;
      out.push_back(output_of(t, d));
    } else {
      t.pending.push_back(output_of(t, d));
    }
    state.tracks.push_back(std::move(t));
  }
  std::sort(out.begin(), out.end(), [](const TrackOutput& x, const TrackOutput& y) {
    return std::tie(x.frame, x.identity) < std::tie(y.frame, y.identity);
  });
  return out;
}

SequenceInput load_sequence_input(const std::filesystem::path& dir) {
  SequenceInput in;
  in.name = dir.filename().string();
  in.detections = motio::load_det_file((dir / "det.txt").string());
  const auto features = dir / "features.bin";
  if (std::filesystem::exists(features)) {
    std::ifstream f(features, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + features.string());
    motio::attach_features(in.detections, motio::read_feature_file(f));
  }
  int max_frame = 0;
  for (const auto& d : in.detections) max_frame = std::max(max_frame, d.frame);
  in.n_frames = max_frame;
  const auto info = dir / "seqinfo.cfg";
  if (std::filesystem::exists(info)) {
    const KeyValueDoc doc = KeyValueDoc::load(info.string(), "seqinfo");
    in.name = doc.get_string("name", in.name);
    in.n_frames = std::max(max_frame, static_cast<int>(doc.get_int("n_frames", max_frame)));
  }
  return in;
}

std::vector<TrackOutput> run_sequence(const SequenceInput& input, const AssocConfig& config,
                                      const fusion::FusionParams* params) {
  config.validate();
  if (config.needs_fusion() && params == nullptr) {
    throw ConfigError("cost mode " + to_string(config.mode) +
                      " with predicted attributes needs fusion parameters");
  }
  std::vector<Detection> dets = input.detections;
  std::stable_sort(dets.begin(), dets.end(),
                   [](const Detection& a, const Detection& b) { return a.frame < b.frame; });
  int n_frames = input.n_frames;
  if (!dets.empty()) n_frames = std::max(n_frames, dets.back().frame);

  TrackerState state;
  std::vector<TrackOutput> out;
  std::size_t pos = 0;
  for (int frame = 1; frame <= n_frames; ++frame) {
    std::size_t end = pos;
    while (end < dets.size() && dets[end].frame == frame) ++end;
    if (pos < dets.size() && dets[pos].frame < frame) {
      throw InvariantError("detection frame must be >= 1");
    }
    const auto step = tracker_step(
        state, std::span<const Detection>(dets.data() + pos, end - pos), config, params);
    out.insert(out.end(), step.begin(), step.end());
    pos = end;
  }
  std::sort(out.begin(), out.end(), [](const TrackOutput& x, const TrackOutput& y) {
    return std::tie(x.frame, x.identity) < std::tie(y.frame, y.identity);
  });
  return out;
}

}  // namespace attmot::assoc
