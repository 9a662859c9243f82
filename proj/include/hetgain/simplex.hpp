#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

namespace hetgain {

using Rng = std::mt19937_64;

/// Euclidean projection of v onto the probability simplex (sorting method).
inline void project_to_simplex(std::span<double> v) {
  const std::size_t n = v.size();
  if (n == 0) return;
  std::vector<double> u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0, theta = 0;
  for (std::size_t k = 0; k < n; ++k) {
    cumulative += u[k];
    const double candidate = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (u[k] - candidate > 0) theta = candidate;
  }
  for (double& x : v) x = std::max(x - theta, 0.0);
}

/// Uniform draw from the (n-1)-simplex via normalized exponential spacings.
inline std::vector<double> sample_simplex(std::size_t n, Rng& rng) {
  std::exponential_distribution<double> exp1(1.0);
  std::vector<double> x(n);
  double total = 0;
  for (double& v : x) total += (v = exp1(rng));
  for (double& v : x) v /= total;
  return x;
}

inline std::vector<double> one_hot(std::size_t n, std::size_t k) {
  std::vector<double> x(n, 0.0);
  x[k] = 1.0;
  return x;
}

inline std::vector<double> uniform_point(std::size_t n) {
  return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

/// Derives an independent stream seed from a base seed and a stream index.
inline std::uint64_t sub_seed(std::uint64_t base, std::uint64_t stream) {
  // splitmix64 finalizer
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace hetgain
