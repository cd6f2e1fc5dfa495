#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace magloc {

// Runs fn(b) for every block b in [0, n_blocks).  Work items are claimed
// from a shared counter, so any thread may run any block; callers must keep
// per-block state and combine it in block order to stay deterministic.
template <class Fn>
inline void parallel_blocks(int n_blocks, int threads, Fn&& fn) {
  if (threads <= 1 || n_blocks <= 1) {
    for (int b = 0; b < n_blocks; ++b) fn(b);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  auto worker = [&] {
    for (;;) {
      int b = next.fetch_add(1);
      if (b >= n_blocks) return;
      try {
        fn(b);
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mu);
        if (!err) err = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  int nw = std::min(threads, n_blocks);
  pool.reserve(nw - 1);
  for (int t = 0; t < nw - 1; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

inline int default_threads() {
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : (int)std::min(hc, 8u);
}

}  // namespace magloc
