#pragma once

// Shared-memory parallel loops. Only row-local work is ever distributed, so
// results never depend on the thread count.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>

#include "msp/common.hpp"

#if defined(MSP_USE_OPENMP)
#include <omp.h>
#endif

namespace msp::parallel {

[[nodiscard]] inline int hardware_threads() noexcept {
  return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

namespace detail {
inline std::atomic<int>& thread_setting() noexcept {
  static std::atomic<int> setting{hardware_threads()};
  return setting;
}
}  // namespace detail

/// Number of workers used by parallel kernels. 1 selects the serial path.
[[nodiscard]] inline int threads() noexcept { return detail::thread_setting().load(); }

inline void set_threads(int count) {
  if (count < 1) throw InvalidArgument("thread count must be >= 1");
  detail::thread_setting().store(count);
}

/// Sets the thread count for the lifetime of the object.
class ScopedThreads {
 public:
  explicit ScopedThreads(int count) : previous_(threads()) { set_threads(count); }
  ~ScopedThreads() { detail::thread_setting().store(previous_); }
  ScopedThreads(const ScopedThreads&) = delete;
  ScopedThreads& operator=(const ScopedThreads&) = delete;

 private:
  int previous_;
};

/// Calls `body(i)` for every i in [begin, end). Iterations must be independent.
template <typename Body>
void for_each_index(Index begin, Index end, Body&& body) {
  if (end <= begin) return;
#if defined(MSP_USE_OPENMP)
  const int workers = threads();
  const auto first = static_cast<std::ptrdiff_t>(begin);
  const auto last = static_cast<std::ptrdiff_t>(end);
#pragma omp parallel for num_threads(workers) schedule(static) if (workers > 1)
  for (std::ptrdiff_t i = first; i < last; ++i) body(static_cast<Index>(i));
#else
  for (Index i = begin; i < end; ++i) body(i);
#endif
}

}  // namespace msp::parallel
