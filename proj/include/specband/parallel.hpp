#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace specband {

// Worker count from the SPECBAND_WORKERS environment variable, else 1.
inline int default_workers() {
  if (const char* s = std::getenv("SPECBAND_WORKERS")) {
    int w = std::atoi(s);
    if (w > 0) return w;
  }
  return 1;
}

// Runs f(i) for i in [0, n) on up to `workers` threads. Index assignment is
// dynamic but each f(i) must only write its own output slot, so results do
// not depend on the worker count.
template <class F>
void parallel_for(size_t n, int workers, F&& f) {
  if (workers <= 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr err;
  std::mutex m;
  auto body = [&] {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(m);
        if (!err) err = std::current_exception();
        next = n;
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  int t = static_cast<int>(std::min<size_t>(static_cast<size_t>(workers), n));
  for (int k = 0; k < t; ++k) pool.emplace_back(body);
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace specband
