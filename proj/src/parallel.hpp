#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace releaseflow::detail {

// Runs task(k) for k in [0, count) on up to `jobs` threads. The first
// exception (lowest index) is rethrown after all workers stop.
inline void parallel_for(int count, int jobs, const std::function<void(int)>& task) {
  jobs = std::clamp(jobs, 1, std::max(count, 1));
  if (jobs == 1) {
    for (int k = 0; k < count; ++k) task(k);
    return;
  }
  std::atomic<int> next{0};
  std::atomic<bool> stop{false};
  std::mutex mu;
  int failed_index = count;
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      const int k = next.fetch_add(1);
      if (k >= count || stop.load()) return;
      try {
        task(k);
      } catch (...) {
        std::lock_guard lock(mu);
        if (k < failed_index) {
          failed_index = k;
          failure = std::current_exception();
        }
        stop.store(true);
      }
    }
  };
  std::vector<std::thread> pool;
  for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}


}  // namespace releaseflow::detail
