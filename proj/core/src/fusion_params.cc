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

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <set>

#include "attmot/fusion.h"
#include "attmot/motio.h"

namespace attmot::fusion {
namespace {

constexpr std::array<std::string_view, kBlockCount> kBlockNames = {
    "w1",       "b1",       "w2",         "b2",         "wq",      "wk",
    "wv",       "aux_wq",   "aux_wk",     "aux_wv",     "emb_wq",  "emb_wk",
    "emb_wv",   "attr_embed", "attr_head", "attr_bias", "query_head",
    "query_bias", "pre_w1", "pre_b1",     "pre_w2",     "pre_b2",  "cat_w1",
    "cat_b1",   "cat_w2",   "cat_b2",     "cat_gain",   "id_head", "id_bias"};

constexpr char kMagic[4] = {'A', 'T', 'M', 'P'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "parameter files are little-endian");

template <typename U>
void put(std::ostream& out, U v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(U));
}

template <typename U>
U get(std::istream& in) {
  U v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(U))) {
    throw std::runtime_error("truncated parameter file");
  }
  return v;
}

const std::array<std::pair<std::string_view, StrategyKind>, 6> kStrategyNames = {{
    {"cross-fertilize", StrategyKind::kCrossFertilize},
    {"self-enhance", StrategyKind::kSelfEnhance},
    {"attr-only", StrategyKind::kAttrOnly},
    {"preproc-attr", StrategyKind::kPreprocAttr},
    {"preproc-both", StrategyKind::kPreprocBoth},
    {"concat-then-self", StrategyKind::kConcatThenSelf},
}};

bool has_rounds(StrategyKind k) {
  return k == StrategyKind::kCrossFertilize || k == StrategyKind::kSelfEnhance;
}

void fill_normal(Eigen::MatrixXd& m, std::mt19937_64& rng, double stddev) {
  std::normal_distribution<double> n(0.0, stddev);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
}

}  // namespace

void FusionStrategy::validate() const {
  if (has_rounds(kind) && rounds < 1) {
    throw InvariantError("fusion strategy rounds must be >= 1");
  }
}

FusionStrategy FusionStrategy::parse(std::string_view text) {
  std::string_view name = text;
  int rounds = 1;
  if (const auto colon = text.find(':'); colon != std::string_view::npos) {
    name = text.substr(0, colon);
    const std::string_view r = text.substr(colon + 1);
    const auto [ptr, ec] = std::from_chars(r.data(), r.data() + r.size(), rounds);
    if (ec != std::errc() || ptr != r.data() + r.size()) {
      throw InvariantError("bad rounds in fusion strategy '" + std::string(text) + "'");
    }
  }
  for (const auto& [n, k] : kStrategyNames) {
    if (n == name) {
      if (!has_rounds(k) && name.size() != text.size()) {
        throw InvariantError("strategy '" + std::string(name) + "' takes no rounds");
      }
      FusionStrategy s{k, rounds};
      s.validate();
      return s;
    }
  }
  throw InvariantError("unknown fusion strategy '" + std::string(text) + "'");
}

std::string FusionStrategy::to_string() const {
  for (const auto& [n, k] : kStrategyNames) {
    if (k == kind) {
      std::string s(n);
      if (has_rounds(kind)) s += ":" + std::to_string(rounds);
      return s;
    }
  }
  return "unknown";
}

std::vector<FusionStrategy> FusionStrategy::all(int rounds) {
  std::vector<FusionStrategy> out;
  for (const auto& [n, k] : kStrategyNames) out.push_back({k, rounds});
  return out;
}

void FusionDims::validate() const {
  if (embed_dim < 1) throw InvariantError("embedding dimension must be >= 1");
  if (tokens < 1) throw InvariantError("token count must be >= 1");
  if (embed_dim % tokens != 0) {
    throw InvariantError("embedding dimension " + std::to_string(embed_dim) +
                         " is not divisible by token count " + std::to_string(tokens));
  }
  if (identities < 1) throw InvariantError("identity count must be >= 1");
}

std::string_view block_name(Block b) { return kBlockNames[static_cast<std::size_t>(b)]; }

std::pair<Eigen::Index, Eigen::Index> FusionParams::shape(Block b, const FusionDims& dims) {
  const Eigen::Index d = dims.embed_dim;
  const Eigen::Index dt = dims.token_dim();
  const Eigen::Index m = static_cast<Eigen::Index>(attr::kCount);
  const Eigen::Index c = d + m;
  const Eigen::Index k = dims.identities;
  switch (b) {
    case Block::kW1: case Block::kW2: return {d, d};
    case Block::kB1: case Block::kB2: return {d, 1};
    case Block::kWq: case Block::kWk: case Block::kWv:
    case Block::kAuxWq: case Block::kAuxWk: case Block::kAuxWv:
    case Block::kEmbWq: case Block::kEmbWk: case Block::kEmbWv: return {dt, dt};
    case Block::kAttrEmbed: case Block::kAttrHead: return {m, dt};
    case Block::kAttrBias: case Block::kQueryBias: case Block::kPreB1:
    case Block::kPreB2: case Block::kCatGain: return {m, 1};
    case Block::kQueryHead: return {m, d};
    case Block::kPreW1: case Block::kPreW2: return {m, m};
    case Block::kCatW1: case Block::kCatW2: return {c, c};
    case Block::kCatB1: case Block::kCatB2: return {c, 1};
    case Block::kIdHead: return {k, d};
    case Block::kIdBias: return {k, 1};
    case Block::kCount: break;
  }
  throw InvariantError("bad parameter block");
}

FusionParams FusionParams::zeros(const FusionDims& dims) {
  dims.validate();
  FusionParams p;
  p.dims = dims;
  for (std::size_t i = 0; i < kBlockCount; ++i) {
    const auto [r, c] = shape(static_cast<Block>(i), dims);
    p.blocks[i] = Eigen::MatrixXd::Zero(r, c);
  }
  return p;
}

FusionParams FusionParams::init(const FusionDims& dims, std::uint64_t seed) {
  FusionParams p = zeros(dims);
  std::mt19937_64 rng(seed);
  const double d = dims.embed_dim;
  const double dt = dims.token_dim();
  const double m = static_cast<double>(attr::kCount);
  const double c = d + m;
  fill_normal(p[Block::kW1], rng, 1.0);
  fill_normal(p[Block::kW2], rng, 0.1 / std::sqrt(d));
  for (Block b : {Block::kWq, Block::kWk, Block::kWv, Block::kAuxWq, Block::kAuxWk,
                  Block::kAuxWv, Block::kEmbWq, Block::kEmbWk, Block::kEmbWv}) {
    fill_normal(p[b], rng, 1.0 / std::sqrt(dt));
  }
  fill_normal(p[Block::kAttrEmbed], rng, 1.0);
  fill_normal(p[Block::kAttrHead], rng, 1.0 / std::sqrt(dt));
  fill_normal(p[Block::kQueryHead], rng, 1.0);
  fill_normal(p[Block::kPreW1], rng, 1.0 / std::sqrt(m));
  fill_normal(p[Block::kPreW2], rng, 0.1 / std::sqrt(m));
  fill_normal(p[Block::kCatW1], rng, 1.0 / std::sqrt(c));
  fill_normal(p[Block::kCatW2], rng, 0.1 / std::sqrt(c));
  p[Block::kCatGain].setOnes();
  fill_normal(p[Block::kIdHead], rng, 0.1);
  return p;
}

void FusionParams::validate() const {
  dims.validate();
  strategy.validate();
  for (std::size_t i = 0; i < kBlockCount; ++i) {
    const auto [r, c] = shape(static_cast<Block>(i), dims);
    if (blocks[i].rows() != r || blocks[i].cols() != c) {
      throw InvariantError("parameter block " + std::string(kBlockNames[i]) +
                           " has shape " + std::to_string(blocks[i].rows()) + "x" +
                           std::to_string(blocks[i].cols()) + ", expected " +
                           std::to_string(r) + "x" + std::to_string(c));
    }
    if (!blocks[i].allFinite()) {
      throw InvariantError("parameter block " + std::string(kBlockNames[i]) +
                           " has non-finite entries");
    }
  }
}

void FusionParams::save(std::ostream& out) const {
  validate();
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(dims.embed_dim));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(dims.tokens));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(dims.identities));
  put<std::uint8_t>(out, scaled_attention ? 1 : 0);
  put<std::uint8_t>(out, a1_from_head ? 1 : 0);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(strategy.kind));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(strategy.rounds));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(kBlockCount));
  for (std::size_t i = 0; i < kBlockCount; ++i) {
    const std::string_view name = kBlockNames[i];
    put<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(blocks[i].rows()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(blocks[i].cols()));
    out.write(reinterpret_cast<const char*>(blocks[i].data()),
              static_cast<std::streamsize>(blocks[i].size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("failed writing parameter file");
}

FusionParams FusionParams::load(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("not an attmot parameter file");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kVersion) {
    throw std::runtime_error("unsupported parameter file version " + std::to_string(version));
  }
  FusionParams p;
  p.dims.embed_dim = static_cast<int>(get<std::uint32_t>(in));
  p.dims.tokens = static_cast<int>(get<std::uint32_t>(in));
  p.dims.identities = static_cast<int>(get<std::uint32_t>(in));
  p.dims.validate();
  p.scaled_attention = get<std::uint8_t>(in) != 0;
  p.a1_from_head = get<std::uint8_t>(in) != 0;
  const auto kind = get<std::uint8_t>(in);
  if (kind >= kStrategyNames.size()) throw std::runtime_error("bad strategy in parameter file");
  p.strategy.kind = static_cast<StrategyKind>(kind);
  p.strategy.rounds = static_cast<int>(get<std::uint32_t>(in));
  const auto count = get<std::uint32_t>(in);
  if (count != kBlockCount) throw std::runtime_error("unexpected block count in parameter file");
  for (std::size_t i = 0; i < kBlockCount; ++i) {
    const auto len = get<std::uint16_t>(in);
    std::string name(len, '\0');
    if (!in.read(name.data(), len) || name != kBlockNames[i]) {
      throw std::runtime_error("unexpected block '" + name + "' in parameter file");
    }
    const auto rows = get<std::uint32_t>(in);
    const auto cols = get<std::uint32_t>(in);
    const auto [r, c] = shape(static_cast<Block>(i), p.dims);
    if (rows != r || cols != c) {
      throw std::runtime_error("block '" + name + "' has inconsistent dimensions");
    }
    p.blocks[i].resize(r, c);
    if (!in.read(reinterpret_cast<char*>(p.blocks[i].data()),
                 static_cast<std::streamsize>(p.blocks[i].size() * sizeof(double)))) {
      throw std::runtime_error("truncated parameter file");
    }
  }
  p.validate();
  return p;
}

void FusionParams::save_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  save(out);
}

FusionParams FusionParams::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return load(in);
}

bool operator==(const FusionParams& a, const FusionParams& b) {
  if (!(a.dims == b.dims && a.strategy == b.strategy &&
        a.scaled_attention == b.scaled_attention && a.a1_from_head == b.a1_from_head)) {
    return false;
  }
  for (std::size_t i = 0; i < kBlockCount; ++i) {
    if (a.blocks[i].rows() != b.blocks[i].rows() ||
        a.blocks[i].cols() != b.blocks[i].cols() ||
        !(a.blocks[i].array() == b.blocks[i].array()).all()) {
      return false;
    }
  }
  return true;
}

void TrainConfig::validate() const {
  if (!(step >= 0.0) || !std::isfinite(step)) throw InvariantError("step size must be >= 0");
  if (iterations < 0) throw InvariantError("iterations must be >= 0");
  if (batch_size < 1) throw InvariantError("batch size must be >= 1");
  if (!(sigma > 0.0)) throw InvariantError("sigma must be > 0");
  if (!(lambda_id >= 0.0)) throw InvariantError("lambda_id must be >= 0");
  if (tokens < 1) throw InvariantError("token count must be >= 1");
}

KeyValueDoc TrainConfig::to_doc() const {
  KeyValueDoc d("train", 1);
  d.set("step", motio::format_real(step));
  d.set("iterations", std::to_string(iterations));
  d.set("batch_size", std::to_string(batch_size));
  d.set("sigma", motio::format_real(sigma));
  d.set("lambda_id", motio::format_real(lambda_id));
  d.set("seed", std::to_string(seed));
  d.set("freeze_embedding", freeze_embedding ? "true" : "false");
  d.set("uniform_weights", uniform_weights ? "true" : "false");
  d.set("tokens", std::to_string(tokens));
  d.set("scaled_attention", scaled_attention ? "true" : "false");
  d.set("a1_from_head", a1_from_head ? "true" : "false");
  return d;
}

TrainConfig TrainConfig::from_doc(const KeyValueDoc& d) {
  TrainConfig c;
  std::set<std::string> known;
  const KeyValueDoc defaults = c.to_doc();
  for (const auto& [k, v] : defaults.entries()) known.insert(k);
  d.require_known(known);
  c.step = d.get_double("step", c.step);
  c.iterations = static_cast<int>(d.get_int("iterations", c.iterations));
  c.batch_size = static_cast<int>(d.get_int("batch_size", c.batch_size));
  c.sigma = d.get_double("sigma", c.sigma);
  c.lambda_id = d.get_double("lambda_id", c.lambda_id);
  c.seed = d.get_uint("seed", c.seed);
  c.freeze_embedding = d.get_bool("freeze_embedding", c.freeze_embedding);
  c.uniform_weights = d.get_bool("uniform_weights", c.uniform_weights);
  c.tokens = static_cast<int>(d.get_int("tokens", c.tokens));
  c.scaled_attention = d.get_bool("scaled_attention", c.scaled_attention);
  c.a1_from_head = d.get_bool("a1_from_head", c.a1_from_head);
  c.validate();
  return c;
}

}  // namespace attmot::fusion
