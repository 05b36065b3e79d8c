#pragma once

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace risp {

/// Worker count: RIS_PREDICT_THREADS if set, else 1 (the single-threaded
/// deterministic reference mode).
inline std::size_t thread_count() {
  if (const char* env = std::getenv("RIS_PREDICT_THREADS")) {
    const long v = std::atol(env);
    if (v >= 1) return static_cast<std::size_t>(v);
  }
  return 1;
}

/// Split [0, n) into contiguous chunks, one per worker; f(worker, begin, end).
/// Callers must reduce per-worker results in worker order so the result is
/// deterministic for a fixed worker count.
template <typename F>
void parallel_chunks(std::size_t n, std::size_t workers, F&& f) {
  workers = std::max<std::size_t>(1, std::min(workers, n ? n : 1));
  if (workers == 1) {
    f(std::size_t{0}, std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t per = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t b = std::min(n, w * per);
    const std::size_t e = std::min(n, b + per);
    pool.emplace_back([&f, w, b, e] { f(w, b, e); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace risp
