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

#ifndef ATTMOT_ASSIGNMENT_H_
#define ATTMOT_ASSIGNMENT_H_

#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace attmot::assoc {

using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

struct Assignment {
  std::vector<std::pair<int, int>> matches;  // (row, col), ascending by row
  std::vector<int> unmatched_rows;
  std::vector<int> unmatched_cols;
};

// Minimum-cost rectangular assignment (shortest augmenting paths with
// potentials). Entries with infeasible(i, j) set, or with cost above
// `threshold`, are never returned as matches. An empty mask means every entry
// is feasible.
Assignment solve_assignment(const Eigen::MatrixXd& cost, const BoolMatrix& infeasible = {},
                            double threshold = std::numeric_limits<double>::infinity());

// Sum of cost over the matches.
double assignment_cost(const Eigen::MatrixXd& cost, const Assignment& a);

}  // namespace attmot::assoc

#endif  // ATTMOT_ASSIGNMENT_H_
