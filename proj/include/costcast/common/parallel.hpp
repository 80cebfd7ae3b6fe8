#pragma once

// Data-parallel helpers. Every parallel loop here writes into preallocated
// slots indexed by iteration, and every reduction sums fixed-size blocks in
// block order, so results do not depend on the number of threads.

#include <omp.h>

#include <algorithm>
#include <cstddef>
#include <exception>
#include <vector>

#include <Eigen/Core>

namespace costcast::parallel {

/// Resolves a user `--jobs` value: 0 means all available threads.
inline int resolve_jobs(int jobs) {
  return jobs > 0 ? jobs : std::max(1, omp_get_max_threads());
}

/// Calls fn(i) for i in [0, n) across `jobs` threads.
/// Exceptions thrown by fn are captured and the first one (lowest i) rethrown.
template <class Fn>
void for_each_index(std::size_t n, int jobs, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  const int threads = resolve_jobs(jobs);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Serial twin of for_each_index.
template <class Fn>
void for_each_index_serial(std::size_t n, Fn&& fn) {
  for (std::size_t i = 0; i < n; ++i) fn(i);
}

inline constexpr std::size_t kReductionBlock = 512;

/// Sums block_fn(begin, end, partial) over fixed blocks of [0, n).
/// block_fn accumulates into a zero-initialised `partial` of size `dim`.
template <class BlockFn>
Eigen::VectorXd blocked_sum(std::size_t n, Eigen::Index dim, int jobs, BlockFn&& block_fn) {
  const std::size_t blocks = (n + kReductionBlock - 1) / kReductionBlock;
  std::vector<Eigen::VectorXd> partials(blocks);
  const int threads = resolve_jobs(jobs);
#pragma omp parallel for schedule(static) num_threads(threads)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(blocks); ++b) {
    const std::size_t begin = static_cast<std::size_t>(b) * kReductionBlock;
    const std::size_t end = std::min(n, begin + kReductionBlock);
    Eigen::VectorXd partial = Eigen::VectorXd::Zero(dim);
    block_fn(begin, end, partial);
    partials[static_cast<std::size_t>(b)] = std::move(partial);
  }
  Eigen::VectorXd total = Eigen::VectorXd::Zero(dim);
  for (const auto& p : partials) total += p;
  return total;
}

}  // namespace costcast::parallel
