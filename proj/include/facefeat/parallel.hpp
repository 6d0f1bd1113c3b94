#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace facefeat {

inline int default_worker_count() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

// Splits [0, n) into at most `workers` contiguous chunks and runs
// fn(begin, end, chunk_index) on each. Callers that reduce chunk results
// must do so in chunk order to stay independent of the worker count.
template <class Fn>
void run_chunked(int n, int workers, Fn&& fn) {
  if (n <= 0) return;
  const int nw = std::max(1, std::min(workers, n));
  if (nw == 1) {
    fn(0, n, 0);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(nw));
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(nw));
  const int base = n / nw;
  const int rem = n % nw;
  int begin = 0;
  for (int c = 0; c < nw; ++c) {
    const int end = begin + base + (c < rem ? 1 : 0);
    threads.emplace_back([&fn, &errors, begin, end, c] {
      try {
        fn(begin, end, c);
      } catch (...) {
        errors[static_cast<std::size_t>(c)] = std::current_exception();
      }
    });
    begin = end;
  }
  for (std::thread& t : threads) t.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace facefeat
