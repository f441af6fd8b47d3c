#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace signpred {

inline std::size_t resolve_workers(std::size_t requested, std::size_t tasks) {
  std::size_t w = requested > 0 ? requested
                                : std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(w, tasks));
}

/// Runs body(index, worker) for every index in [0, count); indices are
/// handed out dynamically. The first exception is rethrown after joining.
template <class Body>
void parallel_for(std::size_t count, std::size_t workers, Body&& body) {
  workers = resolve_workers(workers, count);
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i, std::size_t{0});
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = next++; i < count; i = next++) body(i, w);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!failure) failure = std::current_exception();
          next = count;
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace signpred
