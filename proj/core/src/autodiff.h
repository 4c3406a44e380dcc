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

// Minimal reverse-mode differentiation over dense matrices. Samples are
// columns; token sets of B samples are stacked as B consecutive row blocks.

#ifndef ATTMOT_SRC_AUTODIFF_H_
#define ATTMOT_SRC_AUTODIFF_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace attmot::fusion::ad {

// Dense product; small shapes skip the blocked kernel, whose packing
// overhead dominates for the token-sized matrices used here.
template <typename A, typename B>
auto product(const A& a, const B& b) {
  using M = Eigen::Matrix<typename A::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (a.rows() * a.cols() * b.cols() <= 4096) return M(a.lazyProduct(b));
  return M(a * b);
}

template <typename T>
class Tape {
 public:
  using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  using Var = int;

  // When set, relu and loss clamping record their branch pattern so callers
  // can detect when a perturbation crossed a kink.
  explicit Tape(bool record_branches = false) : record_(record_branches) {}

  Var constant(Mat v) { return push(std::move(v), false); }
  Var variable(Mat v) { return push(std::move(v), true); }
  // Leaf that reads `*m` without copying; `m` must outlive the tape.
  Var reference(const Mat* m, bool needs_grad) {
    const Var v = push(Mat(), needs_grad);
    nodes_[idx(v)].ext = m;
    return v;
  }

  const Mat& value(Var v) const {
    const Node& n = nodes_[idx(v)];
    return n.ext != nullptr ? *n.ext : n.value;
  }
  bool needs_grad(Var v) const { return nodes_[idx(v)].needs_grad; }
  Mat grad(Var v) const {
    const Node& n = nodes_[idx(v)];
    if (n.has_grad) return n.grad;
    return Mat::Zero(value(v).rows(), value(v).cols());
  }
  const std::vector<char>& branches() const { return branches_; }

  Var matmul(Var a, Var b) {
    const Var out = push(product(value(a), value(b)), any(a, b));
    on_backward(out, [this, a, b, out] {
      const Mat& g = nodes_[idx(out)].grad;
      if (needs_grad(a)) acc(a, product(g, value(b).transpose()));
      if (needs_grad(b)) acc(b, product(value(a).transpose(), g));
    });
    return out;
  }

  // a * b^T
  Var matmul_nt(Var a, Var b) {
    const Var out = push(product(value(a), value(b).transpose()), any(a, b));
    on_backward(out, [this, a, b, out] {
      const Mat& g = nodes_[idx(out)].grad;
      if (needs_grad(a)) acc(a, product(g, value(b)));
      if (needs_grad(b)) acc(b, product(g.transpose(), value(a)));
    });
    return out;
  }

  Var add(Var a, Var b) { return add_scaled(a, b, T(1)); }

  // a + s * b
  Var add_scaled(Var a, Var b, T s) {
    const Var out = push(value(a) + s * value(b), any(a, b));
    on_backward(out, [this, a, b, s, out] {
      const Mat& g = nodes_[idx(out)].grad;
      if (needs_grad(a)) acc(a, g);
      if (needs_grad(b)) acc(b, s * g);
    });
    return out;
  }

  // Adds the column vector `bias` to every column of a.
  Var add_col(Var a, Var bias) {
    Mat v = value(a);
    v.colwise() += value(bias).col(0);
    const Var out = push(std::move(v), any(a, bias));
    on_backward(out, [this, a, bias, out] {
      const Mat& g = nodes_[idx(out)].grad;
      if (needs_grad(a)) acc(a, g);
      if (needs_grad(bias)) acc(bias, g.rowwise().sum());
    });
    return out;
  }

  Var scale(Var a, T s) {
    const Var out = push(s * value(a), any(a));
    on_backward(out, [this, a, s, out] { acc(a, s * nodes_[idx(out)].grad); });
    return out;
  }

  Var relu(Var a) {
    const Mat& x = value(a);
    if (record_) {
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        branches_.push_back(x.data()[i] > T(0) ? 1 : 0);
      }
    }
    const Var out = push(x.cwiseMax(T(0)), any(a));
    on_backward(out, [this, a, out] {
      const Mat& g = nodes_[idx(out)].grad;
      acc(a, (value(a).array() > T(0)).select(g, Mat::Zero(g.rows(), g.cols())));
    });
    return out;
  }

  Var sigmoid(Var a) {
    const Var out = push(value(a).unaryExpr([](T z) { return logistic(z); }),
                         any(a));
    on_backward(out, [this, a, out] {
      const Mat& s = nodes_[idx(out)].value;
      acc(a, (nodes_[idx(out)].grad.array() * s.array() * (T(1) - s.array())).matrix());
    });
    return out;
  }

  Var stop_gradient(Var a) { return constant(value(a)); }

  // e (d x B) -> (B*n) x (d/n): token t of sample b is rows [t*dt, (t+1)*dt)
  // of column b.
  Var to_tokens(Var e, int n) {
    const Mat& x = value(e);
    const Eigen::Index dt = x.rows() / n;
    Mat v(x.cols() * n, dt);
    for (Eigen::Index b = 0; b < x.cols(); ++b) {
      for (int t = 0; t < n; ++t) {
        v.row(b * n + t) = x.col(b).segment(t * dt, dt).transpose();
      }
    }
    const Var out = push(std::move(v), any(e));
    on_backward(out, [this, e, n, dt, out] {
      const Mat& g = nodes_[idx(out)].grad;
      Mat ge(dt * n, g.rows() / n);
      for (Eigen::Index b = 0; b < ge.cols(); ++b) {
        for (int t = 0; t < n; ++t) {
          ge.col(b).segment(t * dt, dt) = g.row(b * n + t).transpose();
        }
      }
      acc(e, ge);
    });
    return out;
  }

  // Row b*m + j is scale(j, b) * embed.row(j), for scale m x B, embed m x dt.
  Var query_tokens(Var scale_var, Var embed) {
    const Mat& a = value(scale_var);
    const Mat& w = value(embed);
    const Eigen::Index m = a.rows();
    Mat v(a.cols() * m, w.cols());
    for (Eigen::Index b = 0; b < a.cols(); ++b) {
      for (Eigen::Index j = 0; j < m; ++j) v.row(b * m + j) = a(j, b) * w.row(j);
    }
    const Var out = push(std::move(v), any(scale_var, embed));
    on_backward(out, [this, scale_var, embed, m, out] {
      const Mat& g = nodes_[idx(out)].grad;
      const Mat& a = value(scale_var);
      const Mat& w = value(embed);
      if (needs_grad(scale_var)) {
        Mat ga(m, a.cols());
        for (Eigen::Index b = 0; b < a.cols(); ++b) {
          for (Eigen::Index j = 0; j < m; ++j) ga(j, b) = g.row(b * m + j).dot(w.row(j));
        }
        acc(scale_var, ga);
      }
      if (needs_grad(embed)) {
        Mat gw = Mat::Zero(w.rows(), w.cols());
        for (Eigen::Index b = 0; b < a.cols(); ++b) {
          for (Eigen::Index j = 0; j < m; ++j) gw.row(j) += a(j, b) * g.row(b * m + j);
        }
        acc(embed, gw);
      }
    });
    return out;
  }

  // Per sample b: s * q_b k_b^T, q_b = rows [b*nq, (b+1)*nq), k_b likewise.
  Var block_scores(Var q, Var k, int nq, int nk, T s) {
    const Mat& qv = value(q);
    const Mat& kv = value(k);
    const Eigen::Index batch = qv.rows() / nq;
    Mat v(qv.rows(), nk);
    for (Eigen::Index b = 0; b < batch; ++b) {
      v.middleRows(b * nq, nq) =
          s * qv.middleRows(b * nq, nq).lazyProduct(kv.middleRows(b * nk, nk).transpose());
    }
    const Var out = push(std::move(v), any(q, k));
    on_backward(out, [this, q, k, nq, nk, s, batch, out] {
      const Mat& g = nodes_[idx(out)].grad;
      const Mat& qv = value(q);
      const Mat& kv = value(k);
      if (needs_grad(q)) {
        Mat gq(qv.rows(), qv.cols());
        for (Eigen::Index b = 0; b < batch; ++b) {
          gq.middleRows(b * nq, nq) =
              s * g.middleRows(b * nq, nq).lazyProduct(kv.middleRows(b * nk, nk));
        }
        acc(q, gq);
      }
      if (needs_grad(k)) {
        Mat gk(kv.rows(), kv.cols());
        for (Eigen::Index b = 0; b < batch; ++b) {
          gk.middleRows(b * nk, nk) =
              s * g.middleRows(b * nq, nq).transpose().lazyProduct(qv.middleRows(b * nq, nq));
        }
        acc(k, gk);
      }
    });
    return out;
  }

  Var softmax_rows(Var a) {
    Mat v = value(a);
    for (Eigen::Index r = 0; r < v.rows(); ++r) {
      const T mx = v.row(r).maxCoeff();
      v.row(r) = (v.row(r).array() - mx).exp();
      v.row(r) /= v.row(r).sum();
    }
    const Var out = push(std::move(v), any(a));
    on_backward(out, [this, a, out] {
      const Mat& g = nodes_[idx(out)].grad;
      const Mat& p = nodes_[idx(out)].value;
      const auto inner = (g.array() * p.array()).rowwise().sum();
      acc(a, (p.array() * (g.array().colwise() - inner)).matrix());
    });
    return out;
  }

  // Per sample b: p_b v_b with p_b nq x nk and v_b nk x dt.
  Var block_apply(Var p, Var val, int nq, int nk) {
    const Mat& pv = value(p);
    const Mat& vv = value(val);
    const Eigen::Index batch = pv.rows() / nq;
    Mat v(pv.rows(), vv.cols());
    for (Eigen::Index b = 0; b < batch; ++b) {
      v.middleRows(b * nq, nq) =
          pv.middleRows(b * nq, nq).lazyProduct(vv.middleRows(b * nk, nk));
    }
    const Var out = push(std::move(v), any(p, val));
    on_backward(out, [this, p, val, nq, nk, batch, out] {
      const Mat& g = nodes_[idx(out)].grad;
      const Mat& pv = value(p);
      const Mat& vv = value(val);
      if (needs_grad(p)) {
        Mat gp(pv.rows(), pv.cols());
        for (Eigen::Index b = 0; b < batch; ++b) {
          gp.middleRows(b * nq, nq) =
              g.middleRows(b * nq, nq).lazyProduct(vv.middleRows(b * nk, nk).transpose());
        }
        acc(p, gp);
      }
      if (needs_grad(val)) {
        Mat gv(vv.rows(), vv.cols());
        for (Eigen::Index b = 0; b < batch; ++b) {
          gv.middleRows(b * nk, nk) =
              pv.middleRows(b * nq, nq).transpose().lazyProduct(g.middleRows(b * nq, nq));
        }
        acc(val, gv);
      }
    });
    return out;
  }

  // out(j, b) = tokens.row(b*m + j) . head.row(j), head m x dt.
  Var token_dot(Var tokens, Var head) {
    const Mat& x = value(tokens);
    const Mat& h = value(head);
    const Eigen::Index m = h.rows();
    const Eigen::Index batch = x.rows() / m;
    Mat v(m, batch);
    for (Eigen::Index b = 0; b < batch; ++b) {
      for (Eigen::Index j = 0; j < m; ++j) v(j, b) = x.row(b * m + j).dot(h.row(j));
    }
    const Var out = push(std::move(v), any(tokens, head));
    on_backward(out, [this, tokens, head, m, batch, out] {
      const Mat& g = nodes_[idx(out)].grad;
      const Mat& x = value(tokens);
      const Mat& h = value(head);
      if (needs_grad(tokens)) {
        Mat gx(x.rows(), x.cols());
        for (Eigen::Index b = 0; b < batch; ++b) {
          for (Eigen::Index j = 0; j < m; ++j) gx.row(b * m + j) = g(j, b) * h.row(j);
        }
        acc(tokens, gx);
      }
      if (needs_grad(head)) {
        Mat gh = Mat::Zero(h.rows(), h.cols());
        for (Eigen::Index b = 0; b < batch; ++b) {
          for (Eigen::Index j = 0; j < m; ++j) gh.row(j) += g(j, b) * x.row(b * m + j);
        }
        acc(head, gh);
      }
    });
    return out;
  }

  Var vstack(Var a, Var b) {
    const Mat& x = value(a);
    const Mat& y = value(b);
    Mat v(x.rows() + y.rows(), x.cols());
    v << x, y;
    const Eigen::Index split = x.rows();
    const Var out = push(std::move(v), any(a, b));
    on_backward(out, [this, a, b, split, out] {
      const Mat& g = nodes_[idx(out)].grad;
      if (needs_grad(a)) acc(a, g.topRows(split));
      if (needs_grad(b)) acc(b, g.bottomRows(g.rows() - split));
    });
    return out;
  }

  Var slice_rows(Var a, Eigen::Index begin, Eigen::Index count) {
    const Var out = push(value(a).middleRows(begin, count), any(a));
    on_backward(out, [this, a, begin, count, out] {
      Mat g = Mat::Zero(value(a).rows(), value(a).cols());
      g.middleRows(begin, count) = nodes_[idx(out)].grad;
      acc(a, g);
    });
    return out;
  }

  // Scales row r of a by gain(r, 0).
  Var mul_col(Var a, Var gain) {
    const Var out = push(value(a).array().colwise() * value(gain).col(0).array(),
                         any(a, gain));
    on_backward(out, [this, a, gain, out] {
      const Mat& g = nodes_[idx(out)].grad;
      if (needs_grad(a)) acc(a, (g.array().colwise() * value(gain).col(0).array()).matrix());
      if (needs_grad(gain)) acc(gain, (g.array() * value(a).array()).rowwise().sum().matrix());
    });
    return out;
  }

  // Mean over all entries of the weighted binary cross-entropy of
  // sigmoid(logits) clamped to [eps, 1-eps]. Returns a 1x1 node.
  Var weighted_bce(Var logits, const Mat& target, const Mat& w_pos,
                   const Mat& w_neg, T eps) {
    const Mat& z = value(logits);
    const T n = T(z.size());
    Mat dz(z.rows(), z.cols());
    T total = 0;
    for (Eigen::Index b = 0; b < z.cols(); ++b) {
      for (Eigen::Index j = 0; j < z.rows(); ++j) {
        const T raw = logistic(z(j, b));
        const bool clamped = raw < eps || raw > T(1) - eps;
        if (record_) branches_.push_back(clamped ? 1 : 0);
        const T p = std::clamp(raw, eps, T(1) - eps);
        const T y = target(j, b);
        total -= w_pos(j, 0) * y * std::log(p) +
                 w_neg(j, 0) * (T(1) - y) * std::log(T(1) - p);
        dz(j, b) = clamped ? T(0)
                           : (-w_pos(j, 0) * y * (T(1) - p) +
                              w_neg(j, 0) * (T(1) - y) * p) / n;
      }
    }
    Mat v(1, 1);
    v(0, 0) = total / n;
    const Var out = push(std::move(v), any(logits));
    on_backward(out, [this, logits, dz, out] {
      acc(logits, nodes_[idx(out)].grad(0, 0) * dz);
    });
    return out;
  }

  // Mean softmax cross-entropy of the columns of logits (k x B).
  Var softmax_ce(Var logits, const std::vector<int>& labels) {
    const Mat& z = value(logits);
    Mat dz(z.rows(), z.cols());
    T total = 0;
    const T n = T(z.cols());
    for (Eigen::Index b = 0; b < z.cols(); ++b) {
      const T mx = z.col(b).maxCoeff();
      const auto e = (z.col(b).array() - mx).exp();
      const T sum = e.sum();
      const auto y = static_cast<Eigen::Index>(labels[static_cast<std::size_t>(b)]);
      total += std::log(sum) - (z(y, b) - mx);
      dz.col(b) = e / sum;
      dz(y, b) -= T(1);
    }
    dz /= n;
    Mat v(1, 1);
    v(0, 0) = total / n;
    const Var out = push(std::move(v), any(logits));
    on_backward(out, [this, logits, dz, out] {
      acc(logits, nodes_[idx(out)].grad(0, 0) * dz);
    });
    return out;
  }

  // Runs the reverse sweep from the scalar node `root`.
  void backward(Var root) {
    Node& r = nodes_[idx(root)];
    r.grad = Mat::Ones(value(root).rows(), value(root).cols());
    r.has_grad = true;
    for (Var i = root; i >= 0; --i) {
      Node& n = nodes_[idx(i)];
      if (n.has_grad && n.backward) n.backward();
    }
  }

  static T logistic(T z) {
    if (z >= T(0)) return T(1) / (T(1) + std::exp(-z));
    const T e = std::exp(z);
    return e / (T(1) + e);
  }

 private:
  struct Node {
    Mat value;
    const Mat* ext = nullptr;
    Mat grad;
    bool needs_grad = false;
    bool has_grad = false;
    std::function<void()> backward;
  };

  static std::size_t idx(Var v) { return static_cast<std::size_t>(v); }

  Var push(Mat v, bool needs_grad) {
    nodes_.push_back(Node{std::move(v), nullptr, Mat(), needs_grad, false, {}});
    return static_cast<Var>(nodes_.size() - 1);
  }

  bool any(Var a) const { return needs_grad(a); }
  bool any(Var a, Var b) const { return needs_grad(a) || needs_grad(b); }

  template <typename F>
  void on_backward(Var out, F&& f) {
    if (nodes_[idx(out)].needs_grad) nodes_[idx(out)].backward = std::forward<F>(f);
  }

  template <typename E>
  void acc(Var v, const E& e) {
    Node& n = nodes_[idx(v)];
    if (!n.needs_grad) return;
    if (n.has_grad) {
      n.grad += e;
    } else {
      n.grad = e;
      n.has_grad = true;
    }
  }

  bool record_;
  std::vector<Node> nodes_;
  std::vector<char> branches_;
};

}  // namespace attmot::fusion::ad

#endif  // ATTMOT_SRC_AUTODIFF_H_
