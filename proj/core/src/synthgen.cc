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

#include "attmot/synthgen.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "attmot/distances.h"
#include "attmot/motio.h"

namespace attmot::synth {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double quantize_coord(double v) { return std::round(v * 100.0) / 100.0; }
double quantize_f32(double v) {
  return static_cast<double>(static_cast<float>(v));
}

template <std::size_t N>
std::size_t draw_categorical(Rng& rng, const std::array<double, N>& weights) {
  std::discrete_distribution<std::size_t> dist(weights.begin(), weights.end());
  return dist(rng);
}

bool draw_bernoulli(Rng& rng, double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return std::bernoulli_distribution(p)(rng);
}

void draw_colors(Rng& rng, const std::array<double, 9>& weights, double extra,
                 AttributeVector::Values& bits, std::size_t begin) {
  const std::size_t primary = draw_categorical(rng, weights);
  bits[begin + primary] = 1.0;
  if (!draw_bernoulli(rng, extra)) return;
  std::array<double, 9> rest = weights;
  rest[primary] = 0.0;
  if (std::accumulate(rest.begin(), rest.end(), 0.0) <= 0.0) return;
  bits[begin + draw_categorical(rng, rest)] = 1.0;
}

Eigen::VectorXd unit_gaussian(Rng& rng, int dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = normal(rng);
  const double n = v.norm();
  return n > 0.0 ? Eigen::VectorXd(v / n) : v;
}

double uniform(Rng& rng, double lo, double hi) {
  if (hi <= lo) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double color_marginal(const std::array<double, 9>& w, double extra,
                      std::size_t c) {
  double second = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (k == c || w[k] >= 1.0) continue;
    second += w[k] * w[c] / (1.0 - w[k]);
  }
  return w[c] + extra * second;
}

template <std::size_t N>
void check_categorical(const std::array<double, N>& w, const char* name) {
  double s = 0.0;
  for (double p : w) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw InvariantError(std::string("prior.") + name + ": probability outside [0,1]");
    }
    s += p;
  }
  if (std::abs(s - 1.0) > 1e-9) {
    throw InvariantError(std::string("prior.") + name + ": weights must sum to 1");
  }
}

void check_prob(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw InvariantError(std::string(name) + " must lie in [0,1]");
  }
}

std::string real_text(double v) { return motio::format_real(v); }

template <std::size_t N>
std::string list_text(const std::array<double, N>& w) {
  std::string s;
  for (std::size_t i = 0; i < N; ++i) {
    if (i) s += ", ";
    s += real_text(w[i]);
  }
  return s;
}

template <std::size_t N>
std::array<double, N> read_array(const KeyValueDoc& doc, const std::string& key,
                                 const std::array<double, N>& fallback) {
  if (!doc.has(key)) return fallback;
  const auto v = doc.get_double_list(key, {});
  if (v.size() != N) {
    throw ConfigError("config key '" + key + "' expects " + std::to_string(N) +
                      " values");
  }
  std::array<double, N> out{};
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

// Centre track of one identity over the sequence (index 0 = frame 1).
struct Motion {
  std::vector<double> cx, cy;
};

Motion linear_motion(Rng& rng, const WorldConfig& c) {
  const double t_mid = uniform(rng, 0.3, 0.7) * c.n_frames;
  const double mx = uniform(rng, 0.1, 0.9) * c.image_width;
  const double my = uniform(rng, 0.25, 0.75) * c.image_height;
  const double speed = uniform(rng, 1.5, 4.0);
  const double dir = draw_bernoulli(rng, 0.5) ? 1.0 : -1.0;
  const double vy = uniform(rng, -0.4, 0.4) * speed;
  Motion m;
  for (int f = 1; f <= c.n_frames; ++f) {
    m.cx.push_back(mx + dir * speed * (f - t_mid));
    m.cy.push_back(my + vy * (f - t_mid));
  }
  return m;
}

Motion loiter_motion(Rng& rng, const WorldConfig& c) {
  const double ax = uniform(rng, 0.1, 0.9) * c.image_width;
  const double ay = uniform(rng, 0.25, 0.75) * c.image_height;
  std::normal_distribution<double> step(0.0, 1.5);
  Motion m;
  double x = ax, y = ay;
  for (int f = 1; f <= c.n_frames; ++f) {
    m.cx.push_back(x);
    m.cy.push_back(y);
    x += 0.05 * (ax - x) + step(rng);
    y += 0.05 * (ay - y) + 0.5 * step(rng);
  }
  return m;
}

// Two walkers on nearly the same horizontal line meeting at an integer frame.
std::pair<Motion, Motion> crossing_motion(Rng& rng, const WorldConfig& c,
                                          double front_height) {
  const int t_meet = std::clamp(
      static_cast<int>(std::lround(uniform(rng, 0.25, 0.75) * c.n_frames)), 1,
      c.n_frames);
  const double mx = uniform(rng, 0.25, 0.75) * c.image_width;
  const double my = uniform(rng, 0.35, 0.65) * c.image_height;
  const double s_front = uniform(rng, 1.5, 4.0);
  const double s_rear = uniform(rng, 1.5, 4.0);
  const double dy = uniform(rng, -0.08, 0.08) * front_height;
  const double dir = draw_bernoulli(rng, 0.5) ? 1.0 : -1.0;
  Motion a, b;
  for (int f = 1; f <= c.n_frames; ++f) {
    a.cx.push_back(mx + dir * s_front * (f - t_meet));
    a.cy.push_back(my);
    b.cx.push_back(mx - dir * s_rear * (f - t_meet));
    b.cy.push_back(my + dy);
  }
  return {a, b};
}

BBox clip_to_image(const BBox& b, double w, double h) {
  const double l = std::max(0.0, b.left);
  const double t = std::max(0.0, b.top);
  const double r = std::min(w, b.right());
  const double btm = std::min(h, b.bottom());
  return {l, t, r - l, btm - t};
}

BBox quantize(const BBox& b) {
  return {quantize_coord(b.left), quantize_coord(b.top),
          quantize_coord(b.width), quantize_coord(b.height)};
}

}  // namespace

AttributePrior AttributePrior::uniform() {
  AttributePrior p;
  p.male = 0.5;
  p.body.fill(1.0 / 3.0);
  p.hair.fill(1.0 / 3.0);
  p.long_sleeve = p.upper_long = p.skirt = p.lower_long = 0.5;
  p.backpack = p.hat = p.boots = 0.5;
  p.upper_color.fill(1.0 / 9.0);
  p.lower_color.fill(1.0 / 9.0);
  p.extra_color = 0.0;
  return p;
}

void AttributePrior::validate() const {
  check_prob(male, "prior.male");
  check_categorical(body, "body");
  check_categorical(hair, "hair");
  for (double p : {long_sleeve, upper_long, skirt, lower_long, backpack, hat, boots}) {
    check_prob(p, "prior Bernoulli slot");
  }
  check_categorical(upper_color, "upper_color");
  check_categorical(lower_color, "lower_color");
  check_prob(extra_color, "prior.extra_color");
}

double AttributePrior::marginal(std::size_t index) const {
  using namespace attr;
  if (index == kGender) return male;
  if (index >= kBodyBegin && index < kBodyBegin + kBodyCount) {
    return body[index - kBodyBegin];
  }
  if (index >= kHairBegin && index < kHairBegin + kHairCount) {
    return hair[index - kHairBegin];
  }
  switch (index) {
    case kLongSleeve: return long_sleeve;
    case kUpperLong: return upper_long;
    case kSkirt: return skirt;
    case kLowerLong: return lower_long;
    case kBackpack: return backpack;
    case kHat: return hat;
    case kBoots: return boots;
    default: break;
  }
  if (index >= kUpperColorBegin && index < kUpperColorBegin + kColorCount) {
    return color_marginal(upper_color, extra_color, index - kUpperColorBegin);
  }
  if (index >= kLowerColorBegin && index < kLowerColorBegin + kColorCount) {
    return color_marginal(lower_color, extra_color, index - kLowerColorBegin);
  }
  throw InvariantError("attribute index out of range");
}

WorldConfig WorldConfig::noiseless() {
  WorldConfig c;
  c.miss_base = 0.0;
  c.miss_occ_gain = 0.0;
  c.box_jitter = 0.0;
  c.fp_rate = 0.0;
  c.embed_noise = 0.0;
  c.embed_occ_gain = 0.0;
  c.occluder_mix = 0.0;
  c.attr_flip_base = 0.0;
  c.attr_flip_occ_gain = 0.0;
  return c;
}

WorldConfig WorldConfig::occlusion_heavy() {
  WorldConfig c;
  c.image_width = 960.0;
  c.image_height = 540.0;
  return c;
}

void WorldConfig::validate() const {
  if (n_sequences < 1) throw InvariantError("n_sequences must be >= 1");
  if (n_identities < 1) throw InvariantError("n_identities must be >= 1");
  if (n_frames < 1) throw InvariantError("n_frames must be >= 1");
  if (embed_dim < 1) throw InvariantError("embed_dim must be >= 1");
  if (!(image_width > 0.0 && image_height > 0.0)) {
    throw InvariantError("image size must be positive");
  }
  if (!(min_height > 0.0 && max_height >= min_height)) {
    throw InvariantError("pedestrian heights must satisfy 0 < min <= max");
  }
  if (weight_linear < 0.0 || weight_crossing < 0.0 || weight_loiter < 0.0 ||
      weight_linear + weight_crossing + weight_loiter <= 0.0) {
    throw InvariantError("trajectory weights must be >= 0 with a positive sum");
  }
  check_prob(miss_base, "miss_base");
  check_prob(attr_flip_base, "attr_flip_base");
  check_prob(occluder_mix, "occluder_mix");
  check_prob(attribute_share, "attribute_share");
  if (appearance_rank < 0 || appearance_rank > embed_dim) {
    throw ConfigError("appearance_rank must be in [0, embed_dim]");
  }
  for (double g : {miss_occ_gain, embed_occ_gain, attr_flip_occ_gain}) {
    if (!(g >= 0.0)) throw InvariantError("occlusion gains must be >= 0");
  }
  if (!(box_jitter >= 0.0 && fp_rate >= 0.0 && embed_noise >= 0.0)) {
    throw InvariantError("noise levels must be >= 0");
  }
  prior.validate();
}

KeyValueDoc WorldConfig::to_doc() const {
  KeyValueDoc d("world", 1);
  d.set("n_sequences", std::to_string(n_sequences));
  d.set("n_identities", std::to_string(n_identities));
  d.set("n_frames", std::to_string(n_frames));
  d.set("image_width", real_text(image_width));
  d.set("image_height", real_text(image_height));
  d.set("min_height", real_text(min_height));
  d.set("max_height", real_text(max_height));
  d.set("weight_linear", real_text(weight_linear));
  d.set("weight_crossing", real_text(weight_crossing));
  d.set("weight_loiter", real_text(weight_loiter));
  d.set("miss_base", real_text(miss_base));
  d.set("miss_occ_gain", real_text(miss_occ_gain));
  d.set("box_jitter", real_text(box_jitter));
  d.set("fp_rate", real_text(fp_rate));
  d.set("embed_dim", std::to_string(embed_dim));
  d.set("attribute_share", real_text(attribute_share));
  d.set("embed_noise", real_text(embed_noise));
  d.set("embed_occ_gain", real_text(embed_occ_gain));
  d.set("occluder_mix", real_text(occluder_mix));
  d.set("appearance_seed", std::to_string(appearance_seed));
  d.set("appearance_rank", std::to_string(appearance_rank));
  d.set("attr_flip_base", real_text(attr_flip_base));
  d.set("attr_flip_occ_gain", real_text(attr_flip_occ_gain));
  d.set("prior.male", real_text(prior.male));
  d.set("prior.body", list_text(prior.body));
  d.set("prior.hair", list_text(prior.hair));
  d.set("prior.long_sleeve", real_text(prior.long_sleeve));
  d.set("prior.upper_long", real_text(prior.upper_long));
  d.set("prior.skirt", real_text(prior.skirt));
  d.set("prior.lower_long", real_text(prior.lower_long));
  d.set("prior.backpack", real_text(prior.backpack));
  d.set("prior.hat", real_text(prior.hat));
  d.set("prior.boots", real_text(prior.boots));
  d.set("prior.upper_color", list_text(prior.upper_color));
  d.set("prior.lower_color", list_text(prior.lower_color));
  d.set("prior.extra_color", real_text(prior.extra_color));
  d.set("seed", std::to_string(seed));
  return d;
}

WorldConfig WorldConfig::from_doc(const KeyValueDoc& d) {
  WorldConfig c;
  std::set<std::string> known;
  const KeyValueDoc defaults = c.to_doc();
  for (const auto& [k, v] : defaults.entries()) known.insert(k);
  d.require_known(known);
  c.n_sequences = static_cast<int>(d.get_int("n_sequences", c.n_sequences));
  c.n_identities = static_cast<int>(d.get_int("n_identities", c.n_identities));
  c.n_frames = static_cast<int>(d.get_int("n_frames", c.n_frames));
  c.image_width = d.get_double("image_width", c.image_width);
  c.image_height = d.get_double("image_height", c.image_height);
  c.min_height = d.get_double("min_height", c.min_height);
  c.max_height = d.get_double("max_height", c.max_height);
  c.weight_linear = d.get_double("weight_linear", c.weight_linear);
  c.weight_crossing = d.get_double("weight_crossing", c.weight_crossing);
  c.weight_loiter = d.get_double("weight_loiter", c.weight_loiter);
  c.miss_base = d.get_double("miss_base", c.miss_base);
  c.miss_occ_gain = d.get_double("miss_occ_gain", c.miss_occ_gain);
  c.box_jitter = d.get_double("box_jitter", c.box_jitter);
  c.fp_rate = d.get_double("fp_rate", c.fp_rate);
  c.embed_dim = static_cast<int>(d.get_int("embed_dim", c.embed_dim));
  c.attribute_share = d.get_double("attribute_share", c.attribute_share);
  c.embed_noise = d.get_double("embed_noise", c.embed_noise);
  c.embed_occ_gain = d.get_double("embed_occ_gain", c.embed_occ_gain);
  c.occluder_mix = d.get_double("occluder_mix", c.occluder_mix);
  c.appearance_seed = d.get_uint("appearance_seed", c.appearance_seed);
  c.appearance_rank = static_cast<int>(d.get_int("appearance_rank", c.appearance_rank));
  c.attr_flip_base = d.get_double("attr_flip_base", c.attr_flip_base);
  c.attr_flip_occ_gain = d.get_double("attr_flip_occ_gain", c.attr_flip_occ_gain);
  c.prior.male = d.get_double("prior.male", c.prior.male);
  c.prior.body = read_array(d, "prior.body", c.prior.body);
  c.prior.hair = read_array(d, "prior.hair", c.prior.hair);
  c.prior.long_sleeve = d.get_double("prior.long_sleeve", c.prior.long_sleeve);
  c.prior.upper_long = d.get_double("prior.upper_long", c.prior.upper_long);
  c.prior.skirt = d.get_double("prior.skirt", c.prior.skirt);
  c.prior.lower_long = d.get_double("prior.lower_long", c.prior.lower_long);
  c.prior.backpack = d.get_double("prior.backpack", c.prior.backpack);
  c.prior.hat = d.get_double("prior.hat", c.prior.hat);
  c.prior.boots = d.get_double("prior.boots", c.prior.boots);
  c.prior.upper_color = read_array(d, "prior.upper_color", c.prior.upper_color);
  c.prior.lower_color = read_array(d, "prior.lower_color", c.prior.lower_color);
  c.prior.extra_color = d.get_double("prior.extra_color", c.prior.extra_color);
  c.seed = d.get_uint("seed", c.seed);
  return c;
}

WorldConfig WorldConfig::load(const std::string& path) {
  return from_doc(KeyValueDoc::load(path, "world"));
}

const IdentityCard& SequenceBundle::card(int identity) const {
  if (identity < 1 || identity > static_cast<int>(identities.size())) {
    throw InvariantError("unknown identity " + std::to_string(identity));
  }
  return identities[static_cast<std::size_t>(identity - 1)];
}

std::pair<std::size_t, std::size_t> SequenceBundle::gt_range(int frame) const {
  const auto lo = std::lower_bound(
      gt.begin(), gt.end(), frame,
      [](const GtEntry& e, int f) { return e.frame < f; });
  const auto hi = std::upper_bound(
      lo, gt.end(), frame, [](int f, const GtEntry& e) { return f < e.frame; });
  return {static_cast<std::size_t>(lo - gt.begin()),
          static_cast<std::size_t>(hi - gt.begin())};
}

Eigen::MatrixXd appearance_basis(int dim, std::uint64_t appearance_seed) {
  Rng rng(splitmix64(appearance_seed) ^ static_cast<std::uint64_t>(dim));
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd basis(dim, static_cast<Eigen::Index>(attr::kCount));
  for (Eigen::Index j = 0; j < basis.cols(); ++j) {
    for (Eigen::Index i = 0; i < basis.rows(); ++i) basis(i, j) = normal(rng);
  }
  return basis;
}

Eigen::MatrixXd identity_basis(int dim, int rank, std::uint64_t appearance_seed) {
  Rng rng(splitmix64(appearance_seed ^ 0x1D5EEDULL) ^ static_cast<std::uint64_t>(dim));
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd basis(dim, rank);
  for (Eigen::Index j = 0; j < basis.cols(); ++j) {
    for (Eigen::Index i = 0; i < basis.rows(); ++i) basis(i, j) = normal(rng);
  }
  return basis;
}

AttributeVector sample_attributes(Rng& rng, const AttributePrior& p) {
  using namespace attr;
  AttributeVector::Values bits{};
  bits[kGender] = draw_bernoulli(rng, p.male) ? 1.0 : 0.0;
  bits[kBodyBegin + draw_categorical(rng, p.body)] = 1.0;
  bits[kHairBegin + draw_categorical(rng, p.hair)] = 1.0;
  bits[kLongSleeve] = draw_bernoulli(rng, p.long_sleeve) ? 1.0 : 0.0;
  bits[kUpperLong] = draw_bernoulli(rng, p.upper_long) ? 1.0 : 0.0;
  bits[kSkirt] = draw_bernoulli(rng, p.skirt) ? 1.0 : 0.0;
  bits[kLowerLong] = draw_bernoulli(rng, p.lower_long) ? 1.0 : 0.0;
  bits[kBackpack] = draw_bernoulli(rng, p.backpack) ? 1.0 : 0.0;
  bits[kHat] = draw_bernoulli(rng, p.hat) ? 1.0 : 0.0;
  bits[kBoots] = draw_bernoulli(rng, p.boots) ? 1.0 : 0.0;
  draw_colors(rng, p.upper_color, p.extra_color, bits, kUpperColorBegin);
  draw_colors(rng, p.lower_color, p.extra_color, bits, kLowerColorBegin);
  return AttributeVector::binary(bits);
}

IdentityCard sample_identity(Rng& rng, const WorldConfig& config,
                             const Eigen::MatrixXd& basis, int identity,
                             const Eigen::MatrixXd& id_basis) {
  IdentityCard card;
  card.identity = identity;
  card.attributes = sample_attributes(rng, config.prior);
  Eigen::VectorXd signs(static_cast<Eigen::Index>(attr::kCount));
  for (std::size_t j = 0; j < attr::kCount; ++j) {
    signs[static_cast<Eigen::Index>(j)] = 2.0 * card.attributes[j] - 1.0;
  }
  Eigen::VectorXd attr_dir = basis * signs;
  attr_dir.normalize();
  Eigen::VectorXd own;
  if (id_basis.size() == 0) {
    own = unit_gaussian(rng, config.embed_dim);
  } else {
    own = (id_basis * unit_gaussian(rng, static_cast<int>(id_basis.cols()))).normalized();
  }
  Eigen::VectorXd latent = std::sqrt(1.0 - config.attribute_share) * own +
                           std::sqrt(config.attribute_share) * attr_dir;
  latent.normalize();
  card.latent = Embedding(std::move(latent));
  return card;
}

SequenceBundle simulate_sequence(const WorldConfig& config, std::string name) {
  config.validate();
  Rng rng(splitmix64(config.seed));
  const Eigen::MatrixXd basis =
      appearance_basis(config.embed_dim, config.appearance_seed);
  const Eigen::MatrixXd id_basis =
      identity_basis(config.embed_dim, config.appearance_rank, config.appearance_seed);

  SequenceBundle b;
  b.name = std::move(name);
  b.n_frames = config.n_frames;
  b.image_width = config.image_width;
  b.image_height = config.image_height;
  b.embed_dim = config.embed_dim;

  std::vector<double> heights;
  for (int id = 1; id <= config.n_identities; ++id) {
    b.identities.push_back(sample_identity(rng, config, basis, id, id_basis));
    heights.push_back(uniform(rng, config.min_height, config.max_height));
  }

  const std::array<double, 3> kind_weights = {
      config.weight_linear, config.weight_crossing, config.weight_loiter};
  std::vector<TrajectoryKind> kinds;
  for (int id = 1; id <= config.n_identities; ++id) {
    kinds.push_back(static_cast<TrajectoryKind>(draw_categorical(rng, kind_weights)));
  }

  std::vector<Motion> motions(static_cast<std::size_t>(config.n_identities));
  int pending = -1;
  for (int i = 0; i < config.n_identities; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    switch (kinds[ui]) {
      case TrajectoryKind::kLinear:
        motions[ui] = linear_motion(rng, config);
        break;
      case TrajectoryKind::kLoiter:
        motions[ui] = loiter_motion(rng, config);
        break;
      case TrajectoryKind::kCrossingPair:
        if (pending < 0) {
          pending = i;
        } else {
          const auto up = static_cast<std::size_t>(pending);
          heights[ui] = heights[up] * uniform(rng, 0.92, 1.08);
          auto [front, rear] = crossing_motion(rng, config, heights[up]);
          motions[up] = std::move(front);
          motions[ui] = std::move(rear);
          pending = -1;
        }
        break;
    }
  }
  if (pending >= 0) {
    const auto up = static_cast<std::size_t>(pending);
    kinds[up] = TrajectoryKind::kLinear;
    motions[up] = linear_motion(rng, config);
  }

  for (int i = 0; i < config.n_identities; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    IdentityCard& card = b.identities[ui];
    card.kind = kinds[ui];
    const double h = heights[ui];
    const double w = 0.41 * h;
    for (int f = 0; f < config.n_frames; ++f) {
      const auto uf = static_cast<std::size_t>(f);
      card.path.push_back(BBox::from_center(motions[ui].cx[uf], motions[ui].cy[uf], w, h));
    }
  }

  // Visible ground truth with occlusion from every lower-index box.
  for (int f = 1; f <= config.n_frames; ++f) {
    std::vector<std::pair<int, BBox>> present;
    for (const IdentityCard& card : b.identities) {
      const BBox& full = card.path[static_cast<std::size_t>(f - 1)];
      const BBox clipped =
          quantize(clip_to_image(full, config.image_width, config.image_height));
      if (clipped.width <= 0.0 || clipped.height <= 0.0 ||
          clipped.area() < 0.5 * full.area()) {
        continue;
      }
      present.emplace_back(card.identity, clipped);
    }
    for (std::size_t i = 0; i < present.size(); ++i) {
      OcclusionInfo occ;
      for (std::size_t j = 0; j < i; ++j) {
        const double frac = occlusion_fraction(present[i].second, present[j].second);
        if (frac > occ.occlusion) {
          occ.occlusion = frac;
          occ.occluder = present[j].first;
        }
      }
      GtEntry e;
      e.frame = f;
      e.identity = present[i].first;
      e.box = present[i].second;
      e.visibility = 1.0 - occ.occlusion;
      e.active = true;
      b.gt.push_back(e);
      b.occlusion.push_back(occ);
    }
  }
  return b;
}

double embedding_sigma(const WorldConfig& c, double occ) {
  return c.embed_noise * (1.0 + c.embed_occ_gain * occ);
}

double attribute_flip_probability(const WorldConfig& c, double occ) {
  return std::min(0.5, c.attr_flip_base + c.attr_flip_occ_gain * occ);
}

double miss_probability(const WorldConfig& c, double occ) {
  return std::clamp(c.miss_base + c.miss_occ_gain * occ, 0.0, 1.0);
}

Eigen::VectorXd raw_observed_embedding(Rng& rng, const WorldConfig& config,
                                       const Eigen::VectorXd& latent,
                                       const Eigen::VectorXd* occluder,
                                       double occ) {
  Eigen::VectorXd v = latent;
  if (occluder != nullptr && config.occluder_mix > 0.0 && occ > 0.0) {
    const double m = config.occluder_mix * occ;
    v = (1.0 - m) * latent + m * (*occluder);
  }
  const double sigma = embedding_sigma(config, occ);
  if (sigma > 0.0) {
    std::normal_distribution<double> normal(0.0, sigma);
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] += normal(rng);
  }
  return v;
}

std::vector<Observation> observe_frame_with_truth(const SequenceBundle& bundle,
                                                  int frame,
                                                  const WorldConfig& config) {
  if (frame < 1 || frame > bundle.n_frames) {
    throw InvariantError("frame " + std::to_string(frame) + " outside sequence");
  }
  Rng rng(splitmix64(config.seed ^ (0xD1B54A32D192ED03ULL *
                                    static_cast<std::uint64_t>(frame))));
  std::normal_distribution<double> unit(0.0, 1.0);
  const double W = bundle.image_width;
  const double H = bundle.image_height;

  auto finish_box = [&](BBox box) {
    if (config.box_jitter > 0.0) {
      box.left += config.box_jitter * unit(rng);
      box.top += config.box_jitter * unit(rng);
      box.width = std::max(4.0, box.width + config.box_jitter * unit(rng));
      box.height = std::max(8.0, box.height + config.box_jitter * unit(rng));
    }
    box = quantize(clip_to_image(box, W, H));
    return box;
  };
  auto finish_embedding = [](Eigen::VectorXd v) {
    const double n = v.norm();
    if (n > 0.0) v /= n;
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = quantize_f32(v[i]);
    return Embedding(std::move(v));
  };

  std::vector<Observation> out;
  const auto [lo, hi] = bundle.gt_range(frame);
  for (std::size_t k = lo; k < hi; ++k) {
    const GtEntry& gt = bundle.gt[k];
    const OcclusionInfo& occ = bundle.occlusion[k];
    if (!gt.active || occ.occlusion >= 1.0) continue;
    if (draw_bernoulli(rng, miss_probability(config, occ.occlusion))) continue;
    const IdentityCard& card = bundle.card(gt.identity);

    Observation o;
    o.source = gt.identity;
    o.occlusion = occ.occlusion;
    Detection& d = o.detection;
    d.frame = frame;
    d.box = finish_box(gt.box);
    if (!d.box.valid()) continue;
    d.confidence = config.box_jitter > 0.0
                       ? std::clamp(std::round((uniform(rng, 0.6, 1.0) -
                                                0.3 * occ.occlusion) * 100.0) / 100.0,
                                    0.05, 1.0)
                       : 1.0;
    const Eigen::VectorXd* occluder =
        occ.occluder > 0 ? &bundle.card(occ.occluder).latent.values() : nullptr;
    d.embedding = finish_embedding(raw_observed_embedding(
        rng, config, card.latent.values(), occluder, occ.occlusion));
    AttributeVector::Values bits = card.attributes.values();
    const double p_flip = attribute_flip_probability(config, occ.occlusion);
    for (double& bit : bits) {
      if (draw_bernoulli(rng, p_flip)) bit = 1.0 - bit;
    }
    d.attr_obs = AttributeVector::prob(bits);
    out.push_back(std::move(o));
  }

  if (config.fp_rate > 0.0) {
    const int n_fp = std::poisson_distribution<int>(config.fp_rate)(rng);
    for (int i = 0; i < n_fp; ++i) {
      const double h = uniform(rng, config.min_height, config.max_height);
      const double w = 0.41 * h;
      Observation o;
      Detection& d = o.detection;
      d.frame = frame;
      d.box = quantize(clip_to_image(
          {uniform(rng, 0.0, W - w), uniform(rng, 0.0, H - h), w, h}, W, H));
      if (!d.box.valid()) continue;
      d.confidence = std::round(uniform(rng, 0.3, 0.7) * 100.0) / 100.0;
      d.embedding = finish_embedding(unit_gaussian(rng, bundle.embed_dim));
      d.attr_obs = sample_attributes(rng, config.prior).as_prob();
      out.push_back(std::move(o));
    }
  }
  return out;
}

std::vector<Detection> observe_frame(const SequenceBundle& bundle, int frame,
                                     const WorldConfig& config) {
  std::vector<Detection> dets;
  for (auto& o : observe_frame_with_truth(bundle, frame, config)) {
    dets.push_back(std::move(o.detection));
  }
  return dets;
}

void observe_sequence(SequenceBundle& bundle, const WorldConfig& config) {
  bundle.detections.clear();
  bundle.det_source.clear();
  bundle.det_occlusion.clear();
  for (int f = 1; f <= bundle.n_frames; ++f) {
    for (auto& o : observe_frame_with_truth(bundle, f, config)) {
      bundle.detections.push_back(std::move(o.detection));
      bundle.det_source.push_back(o.source);
      bundle.det_occlusion.push_back(o.occlusion);
    }
  }
}

std::uint64_t sequence_seed(std::uint64_t base_seed, int index) {
  return splitmix64(base_seed * 0x2545F4914F6CDD1DULL +
                    static_cast<std::uint64_t>(index) + 1);
}

void write_sequence(const SequenceBundle& b, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* file, bool binary = false) {
    std::ofstream out(dir / file, binary ? std::ios::binary : std::ios::out);
    if (!out) throw std::runtime_error("cannot write " + (dir / file).string());
    return out;
  };
  {
    auto out = open("gt.txt");
    motio::write_gt_file(out, b.gt);
  }
  {
    auto out = open("det.txt");
    motio::write_det_file(out, b.detections);
  }
  {
    std::map<int, AttributeVector> attrs;
    for (const auto& card : b.identities) attrs.emplace(card.identity, card.attributes);
    auto out = open("attrs.txt");
    motio::write_attr_file(out, attrs);
  }
  {
    auto out = open("features.bin", true);
    motio::write_feature_file(out, b.detections);
  }
  {
    auto out = open("meta.jsonl");
    std::size_t det = 0;
    for (int f = 1; f <= b.n_frames; ++f) {
      nlohmann::ordered_json line;
      line["frame"] = f;
      nlohmann::ordered_json occ = nlohmann::ordered_json::object();
      const auto [lo, hi] = b.gt_range(f);
      for (std::size_t k = lo; k < hi; ++k) {
        occ[std::to_string(b.gt[k].identity)] = b.occlusion[k].occlusion;
      }
      line["occlusion"] = occ;
      nlohmann::ordered_json sources = nlohmann::ordered_json::array();
      while (det < b.detections.size() && b.detections[det].frame == f) {
        sources.push_back(det < b.det_source.size() ? b.det_source[det] : 0);
        ++det;
      }
      line["det_source"] = sources;
      out << line.dump() << '\n';
    }
  }
  {
    KeyValueDoc info("seqinfo", 1);
    info.set("name", b.name);
    info.set("n_frames", std::to_string(b.n_frames));
    info.set("image_width", real_text(b.image_width));
    info.set("image_height", real_text(b.image_height));
    info.set("embed_dim", std::to_string(b.embed_dim));
    auto out = open("seqinfo.cfg");
    info.write(out);
  }
}

std::vector<SequenceBundle> generate_bundles(const WorldConfig& config) {
  config.validate();
  std::vector<SequenceBundle> out;
  for (int i = 0; i < config.n_sequences; ++i) {
    WorldConfig c = config;
    c.seed = sequence_seed(config.seed, i);
    char name[32];
    std::snprintf(name, sizeof(name), "seq-%04d", i + 1);
    SequenceBundle b = simulate_sequence(c, name);
    observe_sequence(b, c);
    out.push_back(std::move(b));
  }
  return out;
}

std::vector<std::filesystem::path> generate_benchmark(
    const WorldConfig& config, const std::filesystem::path& out_dir) {
  config.validate();
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream out(out_dir / "world.cfg");
    if (!out) throw std::runtime_error("cannot write " + (out_dir / "world.cfg").string());
    config.to_doc().write(out);
  }
  std::vector<std::filesystem::path> dirs;
  for (int i = 0; i < config.n_sequences; ++i) {
    WorldConfig c = config;
    c.seed = sequence_seed(config.seed, i);
    char name[32];
    std::snprintf(name, sizeof(name), "seq-%04d", i + 1);
    SequenceBundle b = simulate_sequence(c, name);
    observe_sequence(b, c);
    write_sequence(b, out_dir / name);
    dirs.push_back(out_dir / name);
  }
  return dirs;
}

std::vector<fusion::TrainSample> training_samples(const SequenceBundle& bundle,
                                                  int identity_offset) {
  if (bundle.det_source.size() != bundle.detections.size()) {
    throw InvariantError("bundle has no observation bookkeeping");
  }
  std::vector<fusion::TrainSample> out;
  for (std::size_t i = 0; i < bundle.detections.size(); ++i) {
    const int source = bundle.det_source[i];
    if (source == 0) continue;
    fusion::TrainSample s;
    s.embedding = bundle.detections[i].embedding;
    s.observed = bundle.detections[i].attr_obs;
    s.identity = identity_offset + source - 1;
    s.target = bundle.card(source).attributes;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<fusion::TrainSample> load_training_samples(const std::filesystem::path& dir,
                                                       int identity_offset) {
  std::vector<Detection> dets = motio::load_det_file((dir / "det.txt").string());
  {
    std::ifstream f(dir / "features.bin", std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + (dir / "features.bin").string());
    motio::attach_features(dets, motio::read_feature_file(f));
  }
  const auto attrs = motio::load_attr_file((dir / "attrs.txt").string());
  std::ifstream meta(dir / "meta.jsonl");
  if (!meta) throw std::runtime_error("cannot open " + (dir / "meta.jsonl").string());
  std::map<int, std::vector<int>> sources;
  std::string line;
  while (std::getline(meta, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    sources[j.at("frame").get<int>()] = j.at("det_source").get<std::vector<int>>();
  }
  std::vector<fusion::TrainSample> out;
  std::map<int, std::size_t> used;
  for (const Detection& d : dets) {
    const auto it = sources.find(d.frame);
    std::size_t& k = used[d.frame];
    if (it == sources.end() || k >= it->second.size()) {
      throw motio::ParseError("meta.jsonl does not cover detections of frame " +
                                  std::to_string(d.frame),
                              0);
    }
    const int source = it->second[k++];
    if (source == 0) continue;
    const auto a = attrs.find(source);
    if (a == attrs.end()) {
      throw motio::ParseError("attrs.txt lacks identity " + std::to_string(source), 0);
    }
    fusion::TrainSample s;
    s.embedding = d.embedding;
    s.observed = d.attr_obs;
    s.identity = identity_offset + source - 1;
    s.target = a->second;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<std::filesystem::path> sequence_dirs(const std::filesystem::path& bench_dir) {
  if (!std::filesystem::is_directory(bench_dir)) {
    throw std::runtime_error("not a benchmark directory: " + bench_dir.string());
  }
  std::vector<std::filesystem::path> dirs;
  for (const auto& e : std::filesystem::directory_iterator(bench_dir)) {
    if (e.is_directory() && e.path().filename().string().rfind("seq-", 0) == 0) {
      dirs.push_back(e.path());
    }
  }
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

std::vector<fusion::TrainSample> load_benchmark_samples(const std::filesystem::path& bench_dir,
                                                        std::size_t limit) {
  std::vector<fusion::TrainSample> out;
  int offset = 0;
  for (const auto& dir : sequence_dirs(bench_dir)) {
    auto part = load_training_samples(dir, offset);
    int max_id = offset - 1;
    for (const auto& s : part) max_id = std::max(max_id, s.identity);
    offset = max_id + 1;
    for (auto& s : part) {
      if (limit > 0 && out.size() >= limit) return out;
      out.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace attmot::synth
