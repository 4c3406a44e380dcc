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

#ifndef ATTMOT_CLI_PARALLEL_H_
#define ATTMOT_CLI_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace attmot::cli {

// Runs task(i) for i in [0, n) on at most `jobs` threads. Tasks write their
// results into caller-owned slots indexed by i, so the outcome does not depend
// on scheduling. If tasks throw, the exception of the lowest failing index is
// rethrown after every started task has finished.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& task);

}  // namespace attmot::cli

#endif  // ATTMOT_CLI_PARALLEL_H_
