#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace saak {

// Static range partition across `threads` workers. Callers that need
// deterministic output keep one accumulator per worker and merge them in
// worker-index order afterwards. threads <= 1 runs inline.
inline void parallel_for(std::size_t begin, std::size_t end, unsigned threads,
                         const std::function<void(std::size_t, std::size_t, unsigned)>& body) {
  const std::size_t n = end > begin ? end - begin : 0;
  if (threads <= 1 || n < 2) {
    if (n > 0) body(begin, end, 0);
    return;
  }
  if (threads > n) threads = static_cast<unsigned>(n);
  std::vector<std::thread> workers;
  workers.reserve(threads);
  const std::size_t chunk = (n + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    std::size_t lo = begin + t * chunk;
    std::size_t hi = lo + chunk < end ? lo + chunk : end;
    if (lo >= hi) break;
    workers.emplace_back([&body, lo, hi, t] { body(lo, hi, t); });
  }
  for (auto& w : workers) w.join();
}

}  // namespace saak
