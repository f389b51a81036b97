#pragma once

#include <cstddef>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace torspec::par {

/// Pairwise (tree) summation over a fixed element order. The reduction tree
/// depends only on the array layout, never on the thread schedule, so results
/// are bit-identical across thread counts.
inline double pairwise_sum(const double* data, std::size_t n) {
  if (n <= 16) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += data[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(data, half) + pairwise_sum(data + half, n - half);
}

inline double pairwise_sum(const std::vector<double>& v) {
  return pairwise_sum(v.data(), v.size());
}

template <class Fn>
void parallel_for(std::ptrdiff_t n, Fn&& fn) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) fn(i);
#else
  for (std::ptrdiff_t i = 0; i < n; ++i) fn(i);
#endif
}

/// Map-reduce with deterministic reduction: terms are materialized in index
/// order (possibly by several threads), then folded pairwise.
template <class Fn>
double sum_terms(std::size_t n, Fn&& term) {
  std::vector<double> buf(n);
  parallel_for(static_cast<std::ptrdiff_t>(n),
               [&](std::ptrdiff_t i) { buf[static_cast<std::size_t>(i)] = term(static_cast<std::size_t>(i)); });
  return pairwise_sum(buf);
}

inline int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace torspec::par
