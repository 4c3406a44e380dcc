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

#include "attmot/assignment.h"

#include <algorithm>
#include <cmath>

#include "attmot/types.h"

namespace attmot::assoc {
namespace {

// Rows <= cols. Returns the column assigned to each row.
std::vector<int> hungarian(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(a.cols());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= m; ++j) {
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

}  // namespace

Assignment solve_assignment(const Eigen::MatrixXd& cost, const BoolMatrix& infeasible,
                            double threshold) {
  const Eigen::Index rows = cost.rows();
  const Eigen::Index cols = cost.cols();
  const bool masked = infeasible.size() != 0;
  if (masked && (infeasible.rows() != rows || infeasible.cols() != cols)) {
    throw InvariantError("assignment mask shape does not match cost matrix");
  }
  auto blocked = [&](Eigen::Index i, Eigen::Index j) {
    return (masked && infeasible(i, j)) || !(cost(i, j) <= threshold);
  };

  Assignment out;
  if (rows == 0 || cols == 0) {
    for (Eigen::Index i = 0; i < rows; ++i) out.unmatched_rows.push_back(static_cast<int>(i));
    for (Eigen::Index j = 0; j < cols; ++j) out.unmatched_cols.push_back(static_cast<int>(j));
    return out;
  }

  // Blocked entries get a cost that no feasible matching would prefer: just
  // above the threshold, or above every feasible total when there is none.
  double cap = threshold + 1e-5;
  if (!std::isfinite(threshold)) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) {
        if (!blocked(i, j)) {
          if (!std::isfinite(cost(i, j))) {
            throw InvariantError("assignment costs must be finite");
          }
          worst = std::max(worst, std::abs(cost(i, j)));
        }
      }
    }
    cap = 1.0 + 2.0 * worst * static_cast<double>(std::max(rows, cols));
  }
  Eigen::MatrixXd work(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) work(i, j) = blocked(i, j) ? cap : cost(i, j);
  }

  const bool transposed = rows > cols;
  const std::vector<int> assign = hungarian(transposed ? Eigen::MatrixXd(work.transpose()) : work);
  std::vector<int> row_to_col(static_cast<std::size_t>(rows), -1);
  for (std::size_t k = 0; k < assign.size(); ++k) {
    if (assign[k] < 0) continue;
    if (transposed) {
      row_to_col[static_cast<std::size_t>(assign[k])] = static_cast<int>(k);
    } else {
      row_to_col[k] = assign[k];
    }
  }
  std::vector<char> col_used(static_cast<std::size_t>(cols), 0);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const int j = row_to_col[static_cast<std::size_t>(i)];
    if (j >= 0 && !blocked(i, j)) {
      out.matches.emplace_back(static_cast<int>(i), j);
      col_used[static_cast<std::size_t>(j)] = 1;
    } else {
      out.unmatched_rows.push_back(static_cast<int>(i));
    }
  }
  for (Eigen::Index j = 0; j < cols; ++j) {
    if (!col_used[static_cast<std::size_t>(j)]) out.unmatched_cols.push_back(static_cast<int>(j));
  }
  return out;
}

double assignment_cost(const Eigen::MatrixXd& cost, const Assignment& a) {
  double total = 0.0;
  for (const auto& [i, j] : a.matches) total += cost(i, j);
  return total;
}

}  // namespace attmot::assoc
