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

#include "attmot/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <unordered_map>

#include <Eigen/Core>

#include "attmot/assignment.h"
#include "attmot/distances.h"
#include "attmot/motio.h"

namespace attmot::metrics {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kContinuityBonus = 1000.0;

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

Eigen::MatrixXd iou_matrix(const std::vector<GtEntry>& gt, const std::vector<TrackOutput>& pred) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(gt.size()), static_cast<Eigen::Index>(pred.size()));
  for (std::size_t i = 0; i < gt.size(); ++i) {
    for (std::size_t j = 0; j < pred.size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = iou(gt[i].box, pred[j].box);
    }
  }
  return m;
}

// Maximum total score matching restricted to entries with valid(i, j).
template <typename Valid>
std::vector<std::pair<int, int>> max_score_matching(const Eigen::MatrixXd& score, Valid valid) {
  if (score.size() == 0) return {};
  Eigen::MatrixXd cost(score.rows(), score.cols());
  for (Eigen::Index i = 0; i < score.rows(); ++i) {
    for (Eigen::Index j = 0; j < score.cols(); ++j) {
      cost(i, j) = valid(i, j) ? -score(i, j) : 0.0;
    }
  }
  std::vector<std::pair<int, int>> out;
  for (const auto& [i, j] : assoc::solve_assignment(cost).matches) {
    if (valid(i, j)) out.emplace_back(i, j);
  }
  return out;
}

std::vector<int> frames_of(const EvalInput& in) {
  std::set<int> f;
  for (const auto& [k, v] : in.gt) f.insert(k);
  for (const auto& [k, v] : in.pred) f.insert(k);
  return {f.begin(), f.end()};
}

template <typename T>
const std::vector<T>& rows_at(const std::map<int, std::vector<T>>& m, int frame) {
  static const std::vector<T> kEmpty;
  const auto it = m.find(frame);
  return it == m.end() ? kEmpty : it->second;
}

// Dense index for arbitrary integer identities.
class IdIndex {
 public:
  int operator()(int id) {
    const auto [it, inserted] = map_.emplace(id, static_cast<int>(map_.size()));
    return it->second;
  }
  int size() const { return static_cast<int>(map_.size()); }

 private:
  std::unordered_map<int, int> map_;
};

}  // namespace

double ClearResult::mota() const {
  if (gt <= 0) throw InvariantError("no ground truth");
  return 1.0 - static_cast<double>(fn + fp + idsw) / static_cast<double>(gt);
}

double IdResult::idf1() const {
  return ratio(2.0 * static_cast<double>(idtp), static_cast<double>(gt + pred));
}
double IdResult::idp() const { return ratio(static_cast<double>(idtp), static_cast<double>(pred)); }
double IdResult::idr() const { return ratio(static_cast<double>(idtp), static_cast<double>(gt)); }

double HotaResult::deta(int a) const { return ratio(tp[a], tp[a] + fn[a] + fp[a]); }
double HotaResult::assa(int a) const { return ratio(ass_sum[a], std::max(1.0, tp[a])); }
double HotaResult::hota(int a) const { return std::sqrt(deta(a) * assa(a)); }

double HotaResult::deta() const {
  double s = 0.0;
  for (int a = 0; a < kHotaAlphas; ++a) s += deta(a);
  return s / kHotaAlphas;
}
double HotaResult::assa() const {
  double s = 0.0;
  for (int a = 0; a < kHotaAlphas; ++a) s += assa(a);
  return s / kHotaAlphas;
}
double HotaResult::hota() const {
  double s = 0.0;
  for (int a = 0; a < kHotaAlphas; ++a) s += hota(a);
  return s / kHotaAlphas;
}

EvalInput prepare(std::span<const GtEntry> gt, std::span<const TrackOutput> pred,
                  const EvalOptions& options) {
  EvalInput in;
  std::map<int, std::vector<GtEntry>> all_gt;
  std::set<std::pair<int, int>> seen;
  for (const GtEntry& g : gt) {
    if (!seen.insert({g.frame, g.identity}).second) {
      throw InvariantError("ground-truth identity " + std::to_string(g.identity) +
                           " repeated in frame " + std::to_string(g.frame));
    }
    all_gt[g.frame].push_back(g);
  }
  seen.clear();
  std::map<int, std::vector<TrackOutput>> all_pred;
  for (const TrackOutput& p : pred) {
    if (!seen.insert({p.frame, p.identity}).second) {
      throw InvariantError("predicted identity " + std::to_string(p.identity) +
                           " repeated in frame " + std::to_string(p.frame));
    }
    all_pred[p.frame].push_back(p);
  }
  for (auto& [frame, rows] : all_gt) {
    for (const GtEntry& g : rows) {
      if (g.active) in.gt[frame].push_back(g);
    }
  }
  for (auto& [frame, rows] : all_pred) {
    const auto& frame_gt = rows_at(all_gt, frame);
    const bool has_ignored = std::any_of(frame_gt.begin(), frame_gt.end(),
                                         [](const GtEntry& g) { return !g.active; });
    if (!options.suppress_ignored || !has_ignored) {
      in.pred[frame] = rows;
      continue;
    }
    const Eigen::MatrixXd sim = iou_matrix(frame_gt, rows);
    std::vector<char> drop(rows.size(), 0);
    for (const auto& [i, j] : max_score_matching(sim, [&](Eigen::Index i, Eigen::Index j) {
           return sim(i, j) >= options.iou_threshold - kEps;
         })) {
      if (!frame_gt[static_cast<std::size_t>(i)].active) drop[static_cast<std::size_t>(j)] = 1;
    }
    for (std::size_t j = 0; j < rows.size(); ++j) {
      if (!drop[j]) in.pred[frame].push_back(rows[j]);
    }
  }
  for (const auto& [f, rows] : in.gt) in.gt_count += static_cast<long>(rows.size());
  for (const auto& [f, rows] : in.pred) in.pred_count += static_cast<long>(rows.size());
  if (in.gt_count == 0) throw InvariantError("no ground truth");
  return in;
}

ClearResult clear_metrics(std::span<const GtEntry> gt, std::span<const TrackOutput> pred,
                          const EvalOptions& options) {
  const EvalInput in = prepare(gt, pred, options);
  ClearResult r;
  r.gt = in.gt_count;
  std::unordered_map<int, int> last_match;  // gt identity -> pred identity
  for (int frame : frames_of(in)) {
    const auto& g = rows_at(in.gt, frame);
    const auto& p = rows_at(in.pred, frame);
    const Eigen::MatrixXd sim = iou_matrix(g, p);
    auto valid = [&](Eigen::Index i, Eigen::Index j) {
      return sim(i, j) >= options.iou_threshold - kEps;
    };
    // Continuing a previous correspondence outranks any overlap gain.
    Eigen::MatrixXd score = sim;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto it = last_match.find(g[i].identity);
      if (it == last_match.end()) continue;
      for (std::size_t j = 0; j < p.size(); ++j) {
        if (p[j].identity == it->second) {
          score(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += kContinuityBonus;
        }
      }
    }
    std::vector<int> g_match(g.size(), -1);
    for (const auto& [i, j] : max_score_matching(score, valid)) {
      g_match[static_cast<std::size_t>(i)] = j;
    }

    long matched = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g_match[i] < 0) continue;
      ++matched;
      const int pid = p[static_cast<std::size_t>(g_match[i])].identity;
      const auto it = last_match.find(g[i].identity);
      if (it != last_match.end() && it->second != pid) ++r.idsw;
      last_match[g[i].identity] = pid;
    }
    r.matches += matched;
    r.fn += static_cast<long>(g.size()) - matched;
    r.fp += static_cast<long>(p.size()) - matched;
  }
  return r;
}

IdResult id_metrics(std::span<const GtEntry> gt, std::span<const TrackOutput> pred,
                    const EvalOptions& options) {
  const EvalInput in = prepare(gt, pred, options);
  IdResult r;
  r.gt = in.gt_count;
  r.pred = in.pred_count;
  IdIndex gi, pi;
  std::map<std::pair<int, int>, long> overlap;
  for (int frame : frames_of(in)) {
    const auto& g = rows_at(in.gt, frame);
    const auto& p = rows_at(in.pred, frame);
    for (const auto& x : g) gi(x.identity);
    for (const auto& y : p) pi(y.identity);
    for (const auto& x : g) {
      for (const auto& y : p) {
        if (iou(x.box, y.box) >= options.iou_threshold - kEps) {
          ++overlap[{gi(x.identity), pi(y.identity)}];
        }
      }
    }
  }
  if (gi.size() == 0 || pi.size() == 0) return r;
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(gi.size(), pi.size());
  for (const auto& [key, n] : overlap) w(key.first, key.second) = static_cast<double>(n);
  for (const auto& [i, j] : max_score_matching(w, [](Eigen::Index, Eigen::Index) { return true; })) {
    r.idtp += std::lround(w(i, j));
  }
  return r;
}

HotaResult hota_metrics(std::span<const GtEntry> gt, std::span<const TrackOutput> pred,
                        const EvalOptions& options) {
  const EvalInput in = prepare(gt, pred, options);
  const std::vector<int> frames = frames_of(in);
  HotaResult r;
  for (int a = 0; a < kHotaAlphas; ++a) {
    r.fn[a] = static_cast<double>(in.gt_count);
    r.fp[a] = static_cast<double>(in.pred_count);
  }
  if (in.pred_count == 0) return r;

  IdIndex gi, pi;
  for (int frame : frames) {
    for (const auto& x : rows_at(in.gt, frame)) gi(x.identity);
    for (const auto& y : rows_at(in.pred, frame)) pi(y.identity);
  }
  const int ng = gi.size();
  const int np = pi.size();
  Eigen::MatrixXd potential = Eigen::MatrixXd::Zero(ng, np);
  Eigen::VectorXd gt_count = Eigen::VectorXd::Zero(ng);
  Eigen::VectorXd pred_count = Eigen::VectorXd::Zero(np);

  struct Frame {
    std::vector<int> g, p;
    Eigen::MatrixXd sim;
  };
  std::vector<Frame> cache;
  cache.reserve(frames.size());
  for (int frame : frames) {
    Frame f;
    const auto& g = rows_at(in.gt, frame);
    const auto& p = rows_at(in.pred, frame);
    for (const auto& x : g) f.g.push_back(gi(x.identity));
    for (const auto& y : p) f.p.push_back(pi(y.identity));
    f.sim = iou_matrix(g, p);
    if (f.sim.size() != 0) {
      const Eigen::VectorXd row_sum = f.sim.rowwise().sum();
      const Eigen::RowVectorXd col_sum = f.sim.colwise().sum();
      for (Eigen::Index i = 0; i < f.sim.rows(); ++i) {
        for (Eigen::Index j = 0; j < f.sim.cols(); ++j) {
          const double denom = row_sum[i] + col_sum[j] - f.sim(i, j);
          if (denom > kEps) {
            potential(f.g[static_cast<std::size_t>(i)], f.p[static_cast<std::size_t>(j)]) +=
                f.sim(i, j) / denom;
          }
        }
      }
    }
    for (int id : f.g) gt_count[id] += 1.0;
    for (int id : f.p) pred_count[id] += 1.0;
    cache.push_back(std::move(f));
  }
  Eigen::MatrixXd global(ng, np);
  for (int i = 0; i < ng; ++i) {
    for (int j = 0; j < np; ++j) {
      global(i, j) = potential(i, j) / (gt_count[i] + pred_count[j] - potential(i, j));
    }
  }

  std::vector<Eigen::MatrixXd> matches(kHotaAlphas, Eigen::MatrixXd::Zero(ng, np));
  for (const Frame& f : cache) {
    if (f.sim.size() == 0) continue;
    Eigen::MatrixXd score(f.sim.rows(), f.sim.cols());
    for (Eigen::Index i = 0; i < f.sim.rows(); ++i) {
      for (Eigen::Index j = 0; j < f.sim.cols(); ++j) {
        score(i, j) = global(f.g[static_cast<std::size_t>(i)], f.p[static_cast<std::size_t>(j)]) *
                      f.sim(i, j);
      }
    }
    const auto pairs = max_score_matching(score, [](Eigen::Index, Eigen::Index) { return true; });
    for (int a = 0; a < kHotaAlphas; ++a) {
      const double alpha = HotaResult::alpha(a);
      for (const auto& [i, j] : pairs) {
        if (f.sim(i, j) >= alpha - kEps && score(i, j) > 0.0) {
          r.tp[a] += 1.0;
          matches[static_cast<std::size_t>(a)](f.g[static_cast<std::size_t>(i)],
                                               f.p[static_cast<std::size_t>(j)]) += 1.0;
        }
      }
    }
  }
  for (int a = 0; a < kHotaAlphas; ++a) {
    r.fn[a] = static_cast<double>(in.gt_count) - r.tp[a];
    r.fp[a] = static_cast<double>(in.pred_count) - r.tp[a];
    const Eigen::MatrixXd& m = matches[static_cast<std::size_t>(a)];
    double s = 0.0;
    for (int i = 0; i < ng; ++i) {
      for (int j = 0; j < np; ++j) {
        if (m(i, j) > 0.0) s += m(i, j) * m(i, j) / (gt_count[i] + pred_count[j] - m(i, j));
      }
    }
    r.ass_sum[a] = s;
  }
  return r;
}

SequenceMetrics evaluate(std::string name, std::span<const GtEntry> gt,
                         std::span<const TrackOutput> pred, const EvalOptions& options) {
  SequenceMetrics m;
  m.name = std::move(name);
  m.clear = clear_metrics(gt, pred, options);
  m.id = id_metrics(gt, pred, options);
  m.hota = hota_metrics(gt, pred, options);
  return m;
}

SequenceMetrics aggregate(std::span<const SequenceMetrics> rows, std::string name) {
  SequenceMetrics t;
  t.name = std::move(name);
  for (const auto& r : rows) {
    t.clear.gt += r.clear.gt;
    t.clear.fp += r.clear.fp;
    t.clear.fn += r.clear.fn;
    t.clear.idsw += r.clear.idsw;
    t.clear.matches += r.clear.matches;
    t.id.gt += r.id.gt;
    t.id.pred += r.id.pred;
    t.id.idtp += r.id.idtp;
    for (int a = 0; a < kHotaAlphas; ++a) {
      t.hota.tp[a] += r.hota.tp[a];
      t.hota.fn[a] += r.hota.fn[a];
      t.hota.fp[a] += r.hota.fp[a];
      t.hota.ass_sum[a] += r.hota.ass_sum[a];
    }
  }
  return t;
}

MetricsReport make_report(std::vector<SequenceMetrics> rows) {
  std::sort(rows.begin(), rows.end(),
            [](const SequenceMetrics& a, const SequenceMetrics& b) { return a.name < b.name; });
  MetricsReport r;
  r.total = aggregate(rows);
  r.sequences = std::move(rows);
  return r;
}

namespace {

double safe_mota(const ClearResult& c) { return c.gt > 0 ? c.mota() : 0.0; }

}  // namespace

void write_report_csv(std::ostream& out, const MetricsReport& report) {
  using motio::format_real;
  out << "sequence,MOTA,FN,FP,IDs,HOTA,AssA,IDR,IDP,IDF1,DetA,GT\n";
  auto row = [&](const SequenceMetrics& m) {
    out << m.name << ',' << format_real(safe_mota(m.clear)) << ',' << m.clear.fn << ','
        << m.clear.fp << ',' << m.clear.idsw << ',' << format_real(m.hota.hota()) << ','
        << format_real(m.hota.assa()) << ',' << format_real(m.id.idr()) << ','
        << format_real(m.id.idp()) << ',' << format_real(m.id.idf1()) << ','
        << format_real(m.hota.deta()) << ',' << m.clear.gt << '\n';
  };
  for (const auto& m : report.sequences) row(m);
  row(report.total);
}

void write_report_table(std::ostream& out, const MetricsReport& report) {
  std::size_t width = 9;
  for (const auto& m : report.sequences) width = std::max(width, m.name.size());
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-*s %7s %7s %7s %6s %6s %6s %6s %6s %6s\n",
                static_cast<int>(width), "sequence", "MOTA", "FN", "FP", "IDs", "HOTA", "AssA",
                "IDR", "IDP", "IDF1");
  out << buf;
  auto row = [&](const SequenceMetrics& m) {
    std::snprintf(buf, sizeof(buf), "%-*s %7.1f %7ld %7ld %6ld %6.1f %6.1f %6.1f %6.1f %6.1f\n",
                  static_cast<int>(width), m.name.c_str(), 100.0 * safe_mota(m.clear), m.clear.fn,
                  m.clear.fp, m.clear.idsw, 100.0 * m.hota.hota(), 100.0 * m.hota.assa(),
                  100.0 * m.id.idr(), 100.0 * m.id.idp(), 100.0 * m.id.idf1());
    out << buf;
  };
  for (const auto& m : report.sequences) row(m);
  row(report.total);
}

std::map<double, double> tpr_at_far(const VerificationSet& set,
                                    std::span<const double> far_levels) {
  if (set.positive.empty() || set.negative.empty()) {
    throw InvariantError("verification set needs positive and negative pairs");
  }
  std::vector<double> neg = set.negative;
  std::sort(neg.begin(), neg.end(), std::greater<>());
  std::vector<double> pos = set.positive;
  std::sort(pos.begin(), pos.end());
  std::map<double, double> out;
  for (double far : far_levels) {
    if (!(far > 0.0 && far <= 1.0)) throw InvariantError("far level must be in (0, 1]");
    const double want = far * static_cast<double>(neg.size());
    if (want < 1.0 - 1e-9) throw InvariantError("insufficient negatives");
    const auto k = static_cast<std::size_t>(std::ceil(want - 1e-9));
    const double threshold = neg[k - 1];
    const auto below = std::lower_bound(pos.begin(), pos.end(), threshold) - pos.begin();
    out[far] = static_cast<double>(static_cast<long>(pos.size()) - below) /
               static_cast<double>(pos.size());
  }
  return out;
}

std::map<double, double> tpr_at_far(const VerificationSet& set) {
  static constexpr std::array<double, 3> kLevels = {0.1, 0.01, 0.001};
  return tpr_at_far(set, kLevels);
}

}  // namespace attmot::metrics
