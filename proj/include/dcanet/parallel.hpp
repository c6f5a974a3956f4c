// Copyright 2026 The dcanet Authors. All Rights Reserved.
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

#pragma once

#include <cstdint>
#include <functional>

namespace dcanet {

/// Worker count used by the kernels. Results are bitwise identical for a
/// fixed count; work is split into contiguous, statically assigned ranges.
void set_num_threads(int n);
int num_threads();

/// Runs fn(begin, end) over [0, n) split into at most num_threads() ranges.
void parallel_for(int64_t n, const std::function<void(int64_t, int64_t)>& fn);

}  // namespace dcanet
