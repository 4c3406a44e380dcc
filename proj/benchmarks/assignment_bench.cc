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

#include <random>

#include <benchmark/benchmark.h>

#include "attmot/assignment.h"

namespace {

Eigen::MatrixXd random_cost(int rows, int cols, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd c(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) c(i, j) = u(rng);
  }
  return c;
}

void BM_SquareAssignment(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto cost = random_cost(n, n, 1);
  for (auto _ : state) benchmark::DoNotOptimize(attmot::assoc::solve_assignment(cost));
  state.SetComplexityN(n);
}
BENCHMARK(BM_SquareAssignment)->RangeMultiplier(2)->Range(8, 256)->Complexity();

void BM_ThresholdedAssignment(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto cost = random_cost(n, n + n / 2, 2);
  for (auto _ : state) benchmark::DoNotOptimize(attmot::assoc::solve_assignment(cost, {}, 0.3));
}
BENCHMARK(BM_ThresholdedAssignment)->Arg(16)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
