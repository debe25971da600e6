// Copyright 2026 The qfilab Authors
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

#ifndef QFI_PARALLEL_HPP
#define QFI_PARALLEL_HPP

#include <cstdint>
#include <functional>

namespace qfi {

/// Thread count from an explicit request, else QFI_LAB_THREADS, else hardware.
int resolve_threads(int requested);

/// Runs task(i) for i in [0, count) on up to `threads` workers. Each index runs
/// exactly once; callers store results by index so the outcome does not
/// depend on scheduling.
void parallel_for(std::int64_t count, int threads, const std::function<void(std::int64_t)> &task);

/// SplitMix64 finalizer, used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed for stream `index` derived from a master seed.
std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index);

}  // namespace qfi

#endif
