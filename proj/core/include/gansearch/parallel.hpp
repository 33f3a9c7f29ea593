#pragma once

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace gansearch {

/// Run fn(i) for i in [0, n) across up to `workers` threads. Results must be
/// written to per-index slots; iteration order is unspecified but the set of
/// calls is not, so index-keyed work stays deterministic.
inline void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  if (workers <= 0)
    workers = static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, n));
  if (workers == 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace gansearch
