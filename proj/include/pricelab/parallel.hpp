#pragma once

// Data-parallel kernels. Every kernel has a Serial reference path and an
// OpenMP path; the OpenMP path must not depend on the thread count or the
// schedule, so reductions go through fixed-size blocks combined in order.

#include <algorithm>
#include <cstddef>
#include <vector>

namespace pricelab {

enum class Execution { Serial, Parallel };

inline constexpr std::size_t kReductionBlock = 1024;

template <typename Fn>
void for_each_index(std::size_t n, Fn&& fn, Execution exec = Execution::Parallel) {
  if (exec == Execution::Serial) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i) fn(static_cast<std::size_t>(i));
}

// Folds add(acc, i) over i in [0, n) starting from `zero`. The parallel path
// folds fixed blocks of kReductionBlock indices and combines the block results
// in index order, so its result does not depend on the thread count.
template <typename Acc, typename Add>
Acc block_reduce(std::size_t n, const Acc& zero, Add&& add, Execution exec = Execution::Parallel) {
  if (exec == Execution::Serial) {
    Acc total = zero;
    for (std::size_t i = 0; i < n; ++i) add(total, i);
    return total;
  }
  const std::size_t blocks = (n + kReductionBlock - 1) / kReductionBlock;
  std::vector<Acc> partial(blocks, zero);
  const auto nb = static_cast<std::ptrdiff_t>(blocks);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < nb; ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kReductionBlock;
    const std::size_t hi = std::min(n, lo + kReductionBlock);
    Acc& acc = partial[static_cast<std::size_t>(b)];
    for (std::size_t i = lo; i < hi; ++i) add(acc, i);
  }
  Acc total = zero;
  for (const auto& p : partial) total += p;
  return total;
}

template <typename Acc, typename Term>
Acc block_sum(std::size_t n, const Acc& zero, Term&& term, Execution exec = Execution::Parallel) {
  return block_reduce(
      n, zero, [&](Acc& acc, std::size_t i) { acc += term(i); }, exec);
}

struct Extrema {
  double min;
  double max;
};

// Minimum and maximum of value(i) over [0, n). Exact in both paths.
template <typename Fn>
Extrema grid_extrema(std::size_t n, Fn&& value, Execution exec = Execution::Parallel) {
  std::vector<double> values(n);
  for_each_index(n, [&](std::size_t i) { values[i] = value(i); }, exec);
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return {*lo, *hi};
}

int max_threads();
void set_threads(int n);

}  // namespace pricelab
