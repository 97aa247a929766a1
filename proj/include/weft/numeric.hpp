#pragma once

#include <cstddef>
#include <vector>

namespace weft {

// Pairwise (binary-tree) summation. Besides the accuracy win, a constant
// vector of power-of-two length sums exactly, which the degenerate-case
// contracts rely on (mean of identical values == that value).
inline double pairwise_sum(const double* v, std::size_t n) {
  if (n == 0) return 0.0;
  if (n == 1) return v[0];
  if (n == 2) return v[0] + v[1];
  const std::size_t half = n / 2;
  return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

inline double pairwise_sum(const std::vector<double>& v) {
  return pairwise_sum(v.data(), v.size());
}

inline double pairwise_mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  bool constant = true;
  for (std::size_t i = 1; i < v.size() && constant; ++i) constant = v[i] == v[0];
  if (constant) return v[0];
  return pairwise_sum(v) / static_cast<double>(v.size());
}

}  // namespace weft
