#pragma once

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string_view>
#include <thread>
#include <vector>

namespace coopt {

// Number of worker threads. COOPT_THREADS caps the hardware count.
inline std::size_t worker_count() {
  static const std::size_t count = [] {
    std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("COOPT_THREADS")) {
      std::string_view text(env);
      std::size_t cap = 0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), cap);
      if (ec == std::errc() && ptr == text.data() + text.size() && cap > 0) {
        hw = std::min(hw, cap);
      }
    }
    return hw;
  }();
  return count;
}

// Runs fn(k) for k in [0, count). Every index must write only its own
// output slot; results are then independent of the thread count.
// Small jobs (count * work_per_item below a threshold) run inline.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t work_per_item, Fn&& fn) {
  constexpr std::size_t kMinParallelWork = std::size_t{1} << 16;
  const std::size_t workers = std::min(worker_count(), count);
  if (workers <= 1 || count * work_per_item < kMinParallelWork) {
    for (std::size_t k = 0; k < count; ++k) fn(k);
    return;
  }

  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      threads.emplace_back([&, w] {
        try {
          for (std::size_t k = w; k < count; k += workers) fn(k);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace coopt
