#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace finslab {

// Static-partition parallel for. Each index writes only its own outputs, so
// results are independent of the thread count; reductions are done by the
// caller in index order.
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
  unsigned hw = std::thread::hardware_concurrency();
  std::size_t workers = hw == 0 ? 1 : hw;
  if (workers > count) workers = count == 0 ? 1 : count;
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      for (std::size_t i = w; i < count; i += workers) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace finslab
