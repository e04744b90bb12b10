#ifndef PROTOVERB_PARALLEL_HPP
#define PROTOVERB_PARALLEL_HPP

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace protoverb {

// Runs fn(i) for i in [0, n). Each index is processed exactly once and
// writes only its own slot, so results do not depend on the thread count.
inline void parallel_for(size_t n, int threads,
                         const std::function<void(size_t)>& fn) {
  if (threads <= 1 || n < 2) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const size_t workers = std::min(static_cast<size_t>(threads), n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      for (size_t i = w; i < n; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace protoverb

#endif
