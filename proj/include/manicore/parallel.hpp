#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace manicore {

// Width cap for parallel loops; 0 means hardware concurrency.
inline std::atomic<int>& thread_cap() {
  static std::atomic<int> cap{0};
  return cap;
}

inline void set_threads(int n) { thread_cap() = std::max(0, n); }

inline int effective_threads() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  int cap = thread_cap();
  return std::max(1, cap > 0 ? cap : hw);
}

// Runs fn(i) for i in [0, n). Each index is visited once; results must go to per-index slots.
// The first exception thrown by any worker is rethrown here.
template <class Fn>
void parallel_for(long n, Fn&& fn) {
  int nt = static_cast<int>(std::min<long>(effective_threads(), n));
  if (nt <= 1 || n < 64) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  std::exception_ptr err;
  std::mutex mu;
  auto work = [&] {
    const long chunk = 16;
    while (true) {
      long b = next.fetch_add(chunk);
      if (b >= n) return;
      long e = std::min(n, b + chunk);
      try {
        for (long i = b; i < e; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(mu);
        if (!err) err = std::current_exception();
        next = n;
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < nt; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace manicore
