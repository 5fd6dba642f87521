// Copyright 2026 The dpcusum Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace dpcusum {

inline unsigned default_jobs() noexcept { return std::max(1u, std::thread::hardware_concurrency()); }

/// Calls fn(worker, begin, end) over [0, n) in fixed-size chunks handed out
/// dynamically. Results must not depend on which worker handled which chunk.
template <class Fn>
void parallel_chunks(std::uint64_t n, unsigned jobs, Fn&& fn, std::uint64_t chunk = 64) {
  jobs = std::max(1u, jobs);
  if (jobs == 1 || n <= chunk) {
    if (n > 0) fn(0u, std::uint64_t{0}, n);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto worker = [&](unsigned id) {
    try {
      for (;;) {
        const std::uint64_t begin = next.fetch_add(chunk);
        if (begin >= n) return;
        fn(id, begin, std::min(n, begin + chunk));
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next.store(n);
    }
  };
  std::vector<std::thread> threads;
  const unsigned count = static_cast<unsigned>(std::min<std::uint64_t>(jobs, (n + chunk - 1) / chunk));
  threads.reserve(count);
  for (unsigned i = 0; i < count; ++i) threads.emplace_back(worker, i);
  for (auto& th : threads) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace dpcusum
