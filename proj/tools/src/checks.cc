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

#include "attmot/cli/checks.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "attmot/assignment.h"
#include "attmot/distances.h"
#include "attmot/fusion.h"
#include "attmot/metrics.h"
#include "attmot/motio.h"
#include "attmot/synthgen.h"
#include "attmot/tracker.h"

namespace attmot::checks {
namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string num(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n == 0) return 0.0;
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

CheckResult finish(int id, std::string name, bool pass, std::string detail,
                   Clock::time_point t0) {
  return {id, std::move(name), pass, std::move(detail), since(t0)};
}

template <typename T>
std::map<int, std::vector<T>> by_frame(std::span<const T> rows) {
  std::map<int, std::vector<T>> out;
  for (const T& r : rows) out[r.frame].push_back(r);
  return out;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

namespace oracle {

double min_permutation_cost(const Eigen::MatrixXd& cost) {
  const auto n = static_cast<int>(cost.rows());
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += cost(i, perm[static_cast<std::size_t>(i)]);
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

metrics::ClearResult clear_counts(std::span<const GtEntry> gt, std::span<const TrackOutput> pred,
                                  double iou_threshold) {
  metrics::ClearResult r;
  const auto gf = by_frame(gt);
  const auto pf = by_frame(pred);
  std::set<int> frames;
  for (const auto& [f, v] : gf) frames.insert(f);
  for (const auto& [f, v] : pf) frames.insert(f);
  std::map<int, int> last;
  for (int f : frames) {
    static const std::vector<GtEntry> kNoGt;
    static const std::vector<TrackOutput> kNoPred;
    const auto& g = gf.count(f) ? gf.at(f) : kNoGt;
    const auto& p = pf.count(f) ? pf.at(f) : kNoPred;
    r.gt += static_cast<long>(g.size());

    std::vector<int> cur(g.size(), -1), best;
    std::vector<char> used(p.size(), 0);
    int best_cont = -1;
    double best_iou = -1.0;
    std::function<void(std::size_t, int, double)> search = [&](std::size_t i, int cont,
                                                               double total) {
      if (i == g.size()) {
        if (cont > best_cont || (cont == best_cont && total > best_iou)) {
          best_cont = cont;
          best_iou = total;
          best = cur;
        }
        return;
      }
      cur[i] = -1;
      search(i + 1, cont, total);
      for (std::size_t j = 0; j < p.size(); ++j) {
        if (used[j]) continue;
        const double o = iou(g[i].box, p[j].box);
        if (o < iou_threshold) continue;
        const auto it = last.find(g[i].identity);
        const bool continues = it != last.end() && it->second == p[j].identity;
        used[j] = 1;
        cur[i] = static_cast<int>(j);
        search(i + 1, cont + (continues ? 1 : 0), total + o);
        used[j] = 0;
        cur[i] = -1;
      }
    };
    search(0, 0, 0.0);

    long matched = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (best[i] < 0) continue;
      ++matched;
      const int pid = p[static_cast<std::size_t>(best[i])].identity;
      const auto it = last.find(g[i].identity);
      if (it != last.end() && it->second != pid) ++r.idsw;
      last[g[i].identity] = pid;
    }
    r.matches += matched;
    r.fn += static_cast<long>(g.size()) - matched;
    r.fp += static_cast<long>(p.size()) - matched;
  }
  return r;
}

long idtp(std::span<const GtEntry> gt, std::span<const TrackOutput> pred, double iou_threshold) {
  std::map<std::pair<int, int>, long> overlap;
  std::set<int> gids, pids;
  for (const auto& g : gt) gids.insert(g.identity);
  for (const auto& p : pred) pids.insert(p.identity);
  for (const auto& g : gt) {
    for (const auto& p : pred) {
      if (g.frame == p.frame && iou(g.box, p.box) >= iou_threshold) ++overlap[{g.identity, p.identity}];
    }
  }
  const std::vector<int> gv(gids.begin(), gids.end());
  const std::vector<int> pv(pids.begin(), pids.end());
  std::vector<char> used(pv.size(), 0);
  long best = 0;
  std::function<void(std::size_t, long)> search = [&](std::size_t i, long total) {
    if (i == gv.size()) {
      best = std::max(best, total);
      return;
    }
    search(i + 1, total);
    for (std::size_t j = 0; j < pv.size(); ++j) {
      if (used[j]) continue;
      const auto it = overlap.find({gv[i], pv[j]});
      used[j] = 1;
      search(i + 1, total + (it == overlap.end() ? 0 : it->second));
      used[j] = 0;
    }
  };
  search(0, 0);
  return best;
}

void random_fixture(unsigned seed, int max_ids, int max_frames, std::vector<GtEntry>& gt,
                    std::vector<TrackOutput>& pred) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> shift(0.0, 7.0);
  const int frames = 1 + static_cast<int>(u(rng) * max_frames);
  const int ng = 1 + static_cast<int>(u(rng) * max_ids);
  const int np = static_cast<int>(u(rng) * (max_ids + 1));
  gt.clear();
  pred.clear();
  std::vector<double> base(static_cast<std::size_t>(ng));
  for (auto& b : base) b = 60.0 * u(rng);
  for (int f = 1; f <= frames; ++f) {
    std::vector<BBox> present;
    for (int g = 1; g <= ng; ++g) {
      if (u(rng) < 0.15) continue;
      // Random sizes keep contained boxes from producing exact IoU ties.
      const BBox box{base[static_cast<std::size_t>(g - 1)] + 3.0 * f + 4.0 * u(rng), 5.0 * u(rng),
                     36.0 + 8.0 * u(rng), 76.0 + 8.0 * u(rng)};
      gt.push_back({f, g, box, 1.0, true});
      present.push_back(box);
    }
    for (int p = 1; p <= np; ++p) {
      if (u(rng) < 0.2) continue;
      BBox box{80.0 * u(rng), 10.0 * u(rng), 40.0, 80.0};
      if (!present.empty() && u(rng) < 0.85) {
        box = present[static_cast<std::size_t>(u(rng) * static_cast<double>(present.size()))];
        box.left += shift(rng);
        box.top += shift(rng);
        box.width *= 0.9 + 0.2 * u(rng);
        box.height *= 0.9 + 0.2 * u(rng);
      }
      pred.push_back({f, p, box, 1.0});
    }
  }
  if (gt.empty()) gt.push_back({1, 1, {0.0, 0.0, 40.0, 80.0}, 1.0, true});
}

}  // namespace oracle

CheckResult assignment_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int mismatches = 0;
  int total = 0;
  for (int n = 1; n <= 7; ++n) {
    for (int trial = 0; trial < 100; ++trial) {
      Eigen::MatrixXd c(n, n);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) c(i, j) = u(rng);
      }
      const assoc::Assignment a = assoc::solve_assignment(c);
      const double got = assoc::assignment_cost(c, a);
      if (static_cast<int>(a.matches.size()) != n || got != oracle::min_permutation_cost(c)) {
        ++mismatches;
      }
      ++total;
    }
  }
  const double secs = since(t0);
  return finish(1, "assignment oracle", mismatches == 0 && secs < 5.0,
                std::to_string(total - mismatches) + "/" + std::to_string(total) +
                    " exact optima, limit 5 s",
                t0);
}

CheckResult gradient_correctness() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::string worst_at;
  std::size_t checked = 0, one_sided = 0, skipped = 0;
  bool complete = true;
  for (const auto& strategy : fusion::FusionStrategy::all(2)) {
    for (int d : {8, 16}) {
      for (int seed = 1; seed <= 20; ++seed) {
        synth::WorldConfig w;
        w.embed_dim = d;
        w.n_frames = 5;
        w.n_identities = 3;
        w.seed = static_cast<std::uint64_t>(seed);
        const auto bundle = synth::generate_bundles(w).front();
        auto samples = synth::training_samples(bundle);
        if (samples.empty()) {
          complete = false;
          continue;
        }
        samples.resize(1);
        fusion::FusionDims dims;
        dims.embed_dim = d;
        dims.identities = 3;
        const auto params = fusion::FusionParams::init(dims, static_cast<std::uint64_t>(seed));
        const auto r = fusion::grad_check(params, samples, strategy, fusion::TrainConfig{});
        checked += r.checked;
        one_sided += r.one_sided;
        skipped += r.skipped;
        if (r.max_rel_error > worst) {
          worst = r.max_rel_error;
          worst_at = strategy.to_string() + " d=" + std::to_string(d) + " seed " +
                     std::to_string(seed) + " " + r.worst;
        }
      }
    }
  }
  const double secs = since(t0);
  return finish(2, "gradient correctness", complete && worst <= 1e-4 && secs < 60.0,
                "max rel error " + num(worst) + (worst_at.empty() ? "" : " at " + worst_at) +
                    ", " + std::to_string(checked) + " coordinates, " +
                    std::to_string(one_sided) + " one-sided, " + std::to_string(skipped) +
                    " skipped; limit 1e-4 and 60 s",
                t0);
}

CheckResult attention_exactness() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(77);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto random_embedding = [&](int d) {
    Eigen::VectorXd v(d);
    for (int i = 0; i < d; ++i) v[i] = n01(rng);
    return Embedding(v.normalized());
  };
  auto random_attrs = [&] {
    AttributeVector::Values v{};
    for (auto& x : v) x = u(rng);
    return AttributeVector::prob(v);
  };

  double row_error = 0.0;
  for (int seed = 1; seed <= 20; ++seed) {
    fusion::FusionDims dims;
    dims.embed_dim = 64;
    const auto params = fusion::FusionParams::init(dims, static_cast<std::uint64_t>(seed));
    Eigen::MatrixXd att;
    fusion::cross_attention_forward(random_embedding(64), random_attrs(), params, &att);
    for (Eigen::Index r = 0; r < att.rows(); ++r) {
      row_error = std::max(row_error, std::abs(att.row(r).sum() - 1.0));
    }
  }

  fusion::FusionDims dims;
  dims.embed_dim = 64;
  auto zero = fusion::FusionParams::init(dims, 3);
  for (auto b : {fusion::Block::kW1, fusion::Block::kB1, fusion::Block::kW2, fusion::Block::kB2}) {
    zero.blocks[static_cast<std::size_t>(b)].setZero();
  }
  bool identity = true;
  for (int i = 0; i < 20; ++i) {
    const Embedding e = random_embedding(64);
    identity = identity && fusion::adaptor_forward(e, zero) == e;
  }

  fusion::FusionDims single = dims;
  single.tokens = 1;
  const auto p1 = fusion::FusionParams::init(single, 5);
  double query_effect = 0.0;
  for (int i = 0; i < 20; ++i) {
    const Embedding e = random_embedding(64);
    const Eigen::VectorXd a = fusion::cross_attention_forward(e, random_attrs(), p1);
    const Eigen::VectorXd b = fusion::cross_attention_forward(e, random_attrs(), p1);
    query_effect = std::max(query_effect, (a - b).cwiseAbs().maxCoeff());
  }
  return finish(3, "attention and adaptor exactness",
                row_error <= 1e-9 && identity && query_effect == 0.0,
                "softmax row error " + num(row_error) + ", zero adaptor identity " +
                    (identity ? "exact" : "broken") + ", single-token query effect " +
                    num(query_effect),
                t0);
}

CheckResult loss_anchors() {
  const auto t0 = Clock::now();
  std::vector<double> half(attr::kCount, 0.5), target(attr::kCount), freq(attr::kCount, 0.3);
  for (std::size_t j = 0; j < attr::kCount; ++j) target[j] = j % 3 == 0 ? 1.0 : 0.0;
  const double uniform = fusion::weighted_bce_loss(half, target, freq, 1.0, true);
  const double e1 = std::abs(uniform - std::log(2.0));

  fusion::FusionDims dims;
  dims.embed_dim = 16;
  dims.identities = 7;
  const auto zero = fusion::FusionParams::zeros(dims);
  Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(16, -1.0, 1.0);
  const double id = fusion::identity_loss(Embedding(v), 4, zero);
  const double e2 = std::abs(id - std::log(7.0));

  std::vector<double> ones(attr::kCount, 1.0), rare(attr::kCount, 0.1);
  const double weighted = fusion::weighted_bce_loss(half, ones, rare, 1.0);
  const double e3 = std::abs(weighted - std::exp(0.9) * std::log(2.0));
  return finish(4, "loss anchors", e1 <= 1e-9 && e2 <= 1e-9 && e3 <= 1e-6,
                "uniform BCE error " + num(e1) + ", identity loss error " + num(e2) +
                    ", weighted BCE error " + num(e3),
                t0);
}

CheckResult metrics_oracle() {
  const auto t0 = Clock::now();
  std::vector<std::string> failures;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  };
  auto near = [](double a, double b) { return std::abs(a - b) <= 1e-12; };
  auto box = [](double x) { return BBox{x, 0.0, 40.0, 80.0}; };

  {
    std::vector<GtEntry> gt;
    std::vector<TrackOutput> pred;
    for (int f = 1; f <= 5; ++f) {
      gt.push_back({f, 1, box(0.0), 1.0, true});
      gt.push_back({f, 2, box(500.0), 1.0, true});
      pred.push_back({f, 1, box(0.0), 1.0});
      if (f <= 2) pred.push_back({f, 2, box(500.0), 1.0});
      if (f == 3 || f == 4) pred.push_back({f, 3, box(500.0), 1.0});
    }
    pred.push_back({5, 9, box(1000.0), 1.0});
    const auto c = metrics::clear_metrics(gt, pred);
    expect(c.fp == 1 && c.fn == 1 && c.idsw == 1 && near(c.mota(), 0.7), "MOTA 0.7 fixture");
  }
  {
    std::vector<GtEntry> gt;
    std::vector<TrackOutput> pred;
    for (int f = 1; f <= 4; ++f) {
      gt.push_back({f, 1, box(0.0), 1.0, true});
      pred.push_back({f, f <= 2 ? 1 : 2, box(0.0), 1.0});
    }
    const auto id = metrics::id_metrics(gt, pred);
    expect(id.idtp == 2 && near(id.idf1(), 0.5), "IDF1 0.5 fixture");
  }
  {
    std::vector<GtEntry> gt = {{1, 1, box(0.0), 1.0, true}, {2, 1, box(0.0), 1.0, true}};
    std::vector<TrackOutput> pred = {{1, 1, box(0.0), 1.0}};
    const auto h = metrics::hota_metrics(gt, pred);
    expect(near(h.deta(), 0.5) && near(h.assa(), 0.5) && near(h.hota(), 0.5),
           "HOTA one-miss fixture");
  }
  {
    std::vector<GtEntry> gt;
    for (int f = 1; f <= 10; ++f) gt.push_back({f, 1, box(0.0), 1.0, true});
    const auto c = metrics::clear_metrics(gt, {});
    const auto h = metrics::hota_metrics(gt, {});
    const auto id = metrics::id_metrics(gt, {});
    expect(c.fn == 10 && near(c.mota(), 0.0) && h.hota() == 0.0 && id.idf1() == 0.0,
           "empty prediction fixture");
  }
  {
    std::vector<GtEntry> gt = {{1, 1, box(0.0), 1.0, true}};
    std::vector<TrackOutput> pred = {
        {1, 1, box(300.0), 1.0}, {1, 2, box(600.0), 1.0}, {1, 3, box(900.0), 1.0}};
    const auto c = metrics::clear_metrics(gt, pred);
    expect(c.fp == 3 && c.fn == 1 && near(c.mota(), -3.0), "negative MOTA fixture");
  }
  {
    // Frame 2 offers a better-overlapping new id, but the old one still
    // qualifies and is kept.
    std::vector<GtEntry> gt = {{1, 1, box(0.0), 1.0, true}, {2, 1, box(0.0), 1.0, true}};
    std::vector<TrackOutput> pred = {
        {1, 1, box(0.0), 1.0}, {2, 1, box(8.0), 1.0}, {2, 2, box(0.0), 1.0}};
    const auto c = metrics::clear_metrics(gt, pred);
    expect(c.idsw == 0 && c.fp == 1, "continuity fixture");
  }
  {
    synth::WorldConfig w;
    w.n_frames = 40;
    const auto b = synth::simulate_sequence(w);
    std::vector<TrackOutput> pred;
    for (const auto& g : b.gt) pred.push_back({g.frame, g.identity, g.box, 1.0});
    const auto m = metrics::evaluate("perfect", b.gt, pred);
    expect(m.clear.mota() == 1.0 && m.id.idf1() == 1.0 && m.id.idp() == 1.0 &&
               m.id.idr() == 1.0 && near(m.hota.hota(), 1.0) && near(m.hota.deta(), 1.0) &&
               near(m.hota.assa(), 1.0),
           "perfect tracking");
  }
  int oracle_mismatch = 0;
  const int fixtures = 2000;
  for (int s = 0; s < fixtures; ++s) {
    std::vector<GtEntry> gt;
    std::vector<TrackOutput> pred;
    oracle::random_fixture(static_cast<unsigned>(s), 3, 5, gt, pred);
    const auto c = metrics::clear_metrics(gt, pred);
    const auto o = oracle::clear_counts(gt, pred);
    const auto id = metrics::id_metrics(gt, pred);
    if (c.fp != o.fp || c.fn != o.fn || c.idsw != o.idsw || id.idtp != oracle::idtp(gt, pred)) {
      ++oracle_mismatch;
    }
  }
  expect(oracle_mismatch == 0, std::to_string(oracle_mismatch) + " oracle mismatches");
  std::string detail = "7 hand fixtures, " + std::to_string(fixtures) + " exhaustive-oracle fixtures";
  for (const auto& f : failures) detail += "; FAILED " + f;
  return finish(5, "metrics oracle", failures.empty(), detail, t0);
}

CheckResult association_effect() {
  const auto t0 = Clock::now();
  std::vector<double> idf1_e, idf1_ea, idsw_e, idsw_ea;
  for (int seed = 1; seed <= 10; ++seed) {
    auto w = synth::WorldConfig::occlusion_heavy();
    w.n_sequences = 20;
    w.n_identities = 15;
    w.seed = static_cast<std::uint64_t>(seed);
    const auto bundles = synth::generate_bundles(w);
    std::vector<metrics::SequenceMetrics> re, rea;
    for (const auto& b : bundles) {
      const assoc::SequenceInput in{b.name, b.n_frames, b.detections};
      assoc::AssocConfig c;
      c.mode = assoc::CostMode::kEmbed;
      re.push_back(metrics::evaluate(b.name, b.gt, assoc::run_sequence(in, c)));
      c.mode = assoc::CostMode::kEmbedPlusAttr;
      rea.push_back(metrics::evaluate(b.name, b.gt, assoc::run_sequence(in, c)));
    }
    const auto e = metrics::aggregate(re);
    const auto ea = metrics::aggregate(rea);
    idf1_e.push_back(100.0 * e.id.idf1());
    idf1_ea.push_back(100.0 * ea.id.idf1());
    idsw_e.push_back(static_cast<double>(e.clear.idsw));
    idsw_ea.push_back(static_cast<double>(ea.clear.idsw));
  }
  const double fe = median(idf1_e), fea = median(idf1_ea);
  const double se = median(idsw_e), sea = median(idsw_ea);
  const double secs = since(t0);
  return finish(6, "attribute-assisted association",
                fea >= fe + 3.0 && sea <= 0.9 * se && secs < 120.0,
                "median IDF1 " + num(fe) + " -> " + num(fea) + ", median IDSW " + num(se) +
                    " -> " + num(sea) + " (10 seeds x 20 sequences); limit 120 s",
                t0);
}

CheckResult fusion_training() {
  const auto t0 = Clock::now();
  synth::WorldConfig w;
  w.n_sequences = 5;
  w.seed = 11;
  std::vector<fusion::TrainSample> all;
  int offset = 0;
  for (const auto& b : synth::generate_bundles(w)) {
    auto part = synth::training_samples(b, offset);
    all.insert(all.end(), part.begin(), part.end());
    offset += w.n_identities;
  }
  const std::size_t n_train = 5000;
  if (all.size() < n_train + 500) {
    return finish(7, "fusion-head training", false, "not enough crops generated", t0);
  }
  const std::vector<fusion::TrainSample> train(all.begin(), all.begin() + n_train);
  const std::vector<fusion::TrainSample> held(all.begin() + n_train, all.end());
  const fusion::TrainConfig config;
  const auto result = fusion::train(train, config, fusion::FusionStrategy{});

  std::vector<Embedding> e;
  std::vector<AttributeVector> a, targets;
  for (const auto& s : held) {
    e.push_back(s.embedding);
    a.push_back(s.observed);
    targets.push_back(s.target);
  }
  const auto preds = fusion::predict_batch(e, a, result.params.strategy, result.params);
  const auto acc = fusion::attribute_accuracy(preds, targets);
  const double mean_acc = std::accumulate(acc.begin(), acc.end(), 0.0) / static_cast<double>(acc.size());
  const double start = result.trace.front().total;
  const double end = result.trace.back().total;
  const double secs = since(t0);
  return finish(7, "fusion-head training", mean_acc >= 0.90 && end < start && secs < 60.0,
                "held-out mean attribute accuracy " + num(mean_acc) + " on " +
                    std::to_string(held.size()) + " crops, loss " + num(start) + " -> " +
                    num(end) + "; limit 60 s",
                t0);
}

CheckResult tpr_at_far_properties() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(99);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::vector<double> levels = {0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0};
  bool monotone = true;
  for (int s = 0; s < 50; ++s) {
    metrics::VerificationSet set;
    const int n = 1000 + static_cast<int>(u(rng) * 2000);
    for (int i = 0; i < n; ++i) {
      set.positive.push_back(n01(rng) + 1.0);
      set.negative.push_back(n01(rng));
    }
    double prev = -1.0;
    for (const auto& [far, tpr] : metrics::tpr_at_far(set, levels)) {
      monotone = monotone && tpr >= prev;
      prev = tpr;
    }
  }
  metrics::VerificationSet sep;
  for (int i = 0; i < 1000; ++i) {
    sep.positive.push_back(0.6 + 0.4 * u(rng));
    sep.negative.push_back(0.5 * u(rng));
  }
  bool separated = true;
  for (const auto& [far, tpr] : metrics::tpr_at_far(sep)) separated = separated && tpr == 1.0;
  // 20 independent exchangeable sets of 10k pairs; every one must land in
  // the band.
  double worst = 0.1;
  for (int s = 0; s < 20; ++s) {
    std::mt19937_64 local(1000 + static_cast<unsigned>(s));
    metrics::VerificationSet same;
    for (int i = 0; i < 10000; ++i) {
      same.positive.push_back(n01(local));
      same.negative.push_back(n01(local));
    }
    const double ex = metrics::tpr_at_far(same).at(0.1);
    if (std::abs(ex - 0.1) > std::abs(worst - 0.1)) worst = ex;
  }
  return finish(8, "TPR at FAR", monotone && separated && std::abs(worst - 0.1) <= 0.02,
                std::string("monotone ") + (monotone ? "yes" : "no") + ", separated set " +
                    (separated ? "1.0" : "below 1.0") +
                    ", exchangeable TPR@0.1 furthest from 0.1 over 20 sets " + num(worst),
                t0);
}

CheckResult determinism(const std::filesystem::path& scratch) {
  const auto t0 = Clock::now();
  std::vector<std::string> failures;
  std::filesystem::remove_all(scratch);
  synth::WorldConfig w;
  w.n_sequences = 2;
  w.n_frames = 30;
  w.n_identities = 6;
  w.seed = 5;
  const auto a = scratch / "bench-a";
  const auto b = scratch / "bench-b";
  synth::generate_benchmark(w, a);
  synth::generate_benchmark(w, b);
  std::size_t files = 0;
  for (const auto& e : std::filesystem::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    ++files;
    const auto rel = std::filesystem::relative(e.path(), a);
    if (read_file(e.path()) != read_file(b / rel)) failures.push_back("benchmark file " + rel.string());
  }

  const auto samples = synth::load_benchmark_samples(a, 400);
  fusion::TrainConfig tc;
  tc.iterations = 15;
  std::string traces[2], params[2];
  for (int k = 0; k < 2; ++k) {
    const auto r = fusion::train(samples, tc, fusion::FusionStrategy{});
    std::ostringstream t, p;
    fusion::write_loss_trace(t, r.trace);
    r.params.save(p);
    traces[k] = t.str();
    params[k] = p.str();
  }
  if (traces[0] != traces[1]) failures.push_back("loss trace");
  if (params[0] != params[1]) failures.push_back("trained parameters");

  std::string results[2], reports[2];
  for (int k = 0; k < 2; ++k) {
    std::vector<metrics::SequenceMetrics> rows;
    std::ostringstream res;
    for (const auto& dir : synth::sequence_dirs(a)) {
      const auto input = assoc::load_sequence_input(dir);
      assoc::AssocConfig c;
      c.mode = assoc::CostMode::kEmbedPlusAttr;
      const auto out = assoc::run_sequence(input, c);
      motio::write_result_file(res, out);
      rows.push_back(metrics::evaluate(input.name, motio::load_gt_file((dir / "gt.txt").string()), out));
    }
    std::ostringstream rep;
    metrics::write_report_csv(rep, metrics::make_report(rows));
    results[k] = res.str();
    reports[k] = rep.str();
  }
  if (results[0] != results[1]) failures.push_back("result files");
  if (reports[0] != reports[1]) failures.push_back("reports");

  std::size_t round_trips = 0;
  for (const auto& dir : synth::sequence_dirs(a)) {
    const std::string gt_text = read_file(dir / "gt.txt");
    std::istringstream g1(gt_text);
    const auto gt = motio::parse_gt_file(g1);
    std::ostringstream g2;
    motio::write_gt_file(g2, gt);
    std::istringstream g3(g2.str());
    if (motio::parse_gt_file(g3) != gt || g2.str() != gt_text) failures.push_back("gt round trip");

    const std::string det_text = read_file(dir / "det.txt");
    std::istringstream d1(det_text);
    const auto dets = motio::parse_det_file(d1);
    std::ostringstream d2;
    motio::write_det_file(d2, dets);
    std::istringstream d3(d2.str());
    const auto again = motio::parse_det_file(d3);
    bool same = again.size() == dets.size() && d2.str() == det_text;
    for (std::size_t i = 0; same && i < dets.size(); ++i) {
      same = again[i].frame == dets[i].frame && again[i].box == dets[i].box &&
             again[i].confidence == dets[i].confidence;
    }
    if (!same) failures.push_back("det round trip");

    const std::string attr_text = read_file(dir / "attrs.txt");
    std::istringstream a1(attr_text);
    const auto attrs = motio::parse_attr_file(a1);
    std::ostringstream a2;
    motio::write_attr_file(a2, attrs);
    if (a2.str() != attr_text) failures.push_back("attribute round trip");

    std::istringstream r1(results[0]);
    const auto res = motio::parse_result_file(r1);
    std::ostringstream r2;
    motio::write_result_file(r2, res);
    std::istringstream r3(r2.str());
    if (motio::parse_result_file(r3) != res) failures.push_back("result round trip");
    round_trips += 4;
  }
  std::filesystem::remove_all(scratch);
  std::string detail = std::to_string(files) + " benchmark files, trace, params, results and reports compared; " +
                       std::to_string(round_trips) + " round trips";
  for (const auto& f : failures) detail += "; FAILED " + f;
  return finish(9, "determinism and round trip", failures.empty(), detail, t0);
}

std::vector<Check> all_checks(const std::filesystem::path& scratch) {
  return {
      {1, "assignment oracle", assignment_oracle},
      {2, "gradient correctness", gradient_correctness},
      {3, "attention and adaptor exactness", attention_exactness},
      {4, "loss anchors", loss_anchors},
      {5, "metrics oracle", metrics_oracle},
      {6, "attribute-assisted association", association_effect},
      {7, "fusion-head training", fusion_training},
      {8, "TPR at FAR", tpr_at_far_properties},
      {9, "determinism and round trip", [scratch] { return determinism(scratch); }},
  };
}

std::string format_result(const CheckResult& r) {
  char secs[32];
  std::snprintf(secs, sizeof(secs), "%.2f s", r.seconds);
  return std::string(r.pass ? "PASS" : "FAIL") + " [" + std::to_string(r.id) + "] " + r.name +
         ": " + r.detail + " (" + secs + ")";
}

}  // namespace attmot::checks
