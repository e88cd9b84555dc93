#pragma once

#include <algorithm>
#include <thread>
#include <vector>

namespace strokefield {

inline int resolve_thread_count(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs f(i) for every i in [0, count), split into contiguous chunks, one per
// worker. Each item must only touch state it owns; the caller performs any
// cross-item reduction afterwards in a fixed order, so results do not depend
// on the thread count.
template <class F>
void parallel_for(int count, int threads, F&& f) {
  threads = std::min(resolve_thread_count(threads), count);
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) f(i);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(static_cast<std::size_t>(threads));
  const int chunk = (count + threads - 1) / threads;
  for (int w = 0; w < threads; ++w) {
    const int begin = w * chunk;
    const int end = std::min(count, begin + chunk);
    if (begin >= end) break;
    workers.emplace_back([&f, begin, end] {
      for (int i = begin; i < end; ++i) f(i);
    });
  }
  for (auto& t : workers) t.join();
}

}  // namespace strokefield
