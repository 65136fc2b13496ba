#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace isrncr {

/// Worker count from ISRNCR_THREADS (0 or unset = hardware concurrency).
std::size_t worker_count();

/// Overrides the environment setting; 0 restores it.
void set_worker_count(std::size_t n);

/// Runs fn(k) for k in [0, count). Work is split into contiguous chunks;
/// small counts run on the calling thread.
void parallel_for(std::size_t count, const std::function<void(std::size_t)> &fn);

/// Pairwise (tree) reduction of terms[lo, hi) with a fixed split point, so the
/// result does not depend on how the terms were produced.
template <class T>
T pairwise_sum(const std::vector<T> &terms, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1)
    return terms[lo];
  const std::size_t mid = lo + (hi - lo) / 2;
  T left = pairwise_sum(terms, lo, mid);
  left += pairwise_sum(terms, mid, hi);
  return left;
}

template <class T> T pairwise_sum(const std::vector<T> &terms) {
  return pairwise_sum(terms, 0, terms.size());
}

} // namespace isrncr
