#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace bhps {

/// Number of worker threads to use when the caller passes 0.
inline int default_workers() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

/// Runs fn(i) for i in [0, count) on `workers` threads using a static contiguous partition.
///
/// Callers write results into slot i, so the outcome never depends on the worker count.
/// If any call throws, the exception of the lowest failing index is rethrown after all
/// workers have joined.
template <class Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
  if (count == 0) return;
  if (workers <= 0) workers = default_workers();
  const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(workers), count);
  if (w == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(w);
  std::vector<std::thread> threads;
  threads.reserve(w);
  for (std::size_t k = 0; k < w; ++k) {
    const std::size_t begin = count * k / w;
    const std::size_t end = count * (k + 1) / w;
    threads.emplace_back([&, k, begin, end] {
      for (std::size_t i = begin; i < end; ++i) {
        try {
          fn(i);
        } catch (...) {
          errors[k] = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  for (std::size_t k = 0; k < w; ++k)
    if (errors[k]) std::rethrow_exception(errors[k]);
}

/// Pairwise summation in fixed index order.
template <class T, class Get>
T pairwise_sum(std::size_t begin, std::size_t end, Get&& get) {
  const std::size_t n = end - begin;
  if (n == 0) return T{};
  if (n <= 8) {
    T acc = get(begin);
    for (std::size_t i = begin + 1; i < end; ++i) acc = acc + get(i);
    return acc;
  }
  const std::size_t mid = begin + n / 2;
  return pairwise_sum<T>(begin, mid, get) + pairwise_sum<T>(mid, end, get);
}

}  // namespace bhps
