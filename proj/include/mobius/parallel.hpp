#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace mobius {

/// Worker count: MOBIUS_LAB_THREADS if set (>= 1), else hardware concurrency.
std::size_t worker_count();

/// Splits [0, count) into contiguous chunks, runs `body(begin, end)` on each
/// (concurrently when more than one worker is available) and returns the
/// per-chunk results in chunk order. Reductions over the returned vector are
/// therefore deterministic regardless of the thread count as long as the
/// reduction itself is order-insensitive or tie-broken.
template <class Result, class Body>
std::vector<Result> parallel_chunks(std::size_t count, Body&& body, std::size_t min_chunk = 256) {
  std::size_t workers = worker_count();
  if (count < 2 * min_chunk) workers = 1;
  workers = std::max<std::size_t>(1, std::min(workers, count / std::max<std::size_t>(1, min_chunk)));
  std::vector<Result> results(workers);
  if (workers == 1) {
    results[0] = body(std::size_t{0}, count);
    return results;
  }
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(workers);
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = count * w / workers, end = count * (w + 1) / workers;
    threads.emplace_back([&results, &errors, &body, w, begin, end] {
      try {
        results[w] = body(begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

}  // namespace mobius
