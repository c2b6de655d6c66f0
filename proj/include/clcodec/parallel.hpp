#ifndef CLCODEC_PARALLEL_HPP
#define CLCODEC_PARALLEL_HPP

#include <cstdint>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace clc {

// Worker count: explicit set wins, else CLCODEC_THREADS, else 1. Results are
// bitwise independent of the count because every output element is reduced by
// exactly one worker in a fixed order.
inline int& thread_count_ref() {
  static int count = [] {
    if (const char* env = std::getenv("CLCODEC_THREADS")) {
      int n = std::atoi(env);
      if (n >= 1) return n;
    }
    return 1;
  }();
  return count;
}

inline int thread_count() { return thread_count_ref(); }
inline void set_thread_count(int n) { thread_count_ref() = n >= 1 ? n : 1; }

template <typename F>
void parallel_for(int64_t n, F&& body) {
  int workers = thread_count();
  if (workers <= 1 || n < 2 * workers) {
    body(int64_t{0}, n);
    return;
  }
  std::vector<std::thread> threads;
  int64_t chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    int64_t begin = w * chunk;
    int64_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    threads.emplace_back([&body, begin, end] { body(begin, end); });
  }
  for (auto& t : threads) t.join();
}

}  // namespace clc

#endif
