#pragma once

// Majorization and Schur-convexity tests: exact partial-sum majorization,
// randomized pair sampling, empirical and analytic classification, and the
// midpoint-convexity shortcut for sum-form aggregators.

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "hetgain/aggregators.hpp"
#include "hetgain/error.hpp"
#include "hetgain/simplex.hpp"

namespace hetgain {

enum class Curvature { SchurConvex, SchurConcave, Both, Neither };

inline std::string_view to_string(Curvature c) {
  switch (c) {
    case Curvature::SchurConvex: return "convex";
    case Curvature::SchurConcave: return "concave";
    case Curvature::Both: return "both";
    case Curvature::Neither: return "neither";
  }
  return "?";
}

struct MajorizationPair {
  std::vector<double> x;  // the more unequal vector
  std::vector<double> y;
};

struct CurvatureVerdict {
  Curvature classification = Curvature::Both;
  bool strict = false;
  std::size_t evidence_count = 0;
  std::optional<MajorizationPair> convexity_counterexample;   // f(x) < f(y)
  std::optional<MajorizationPair> concavity_counterexample;   // f(x) > f(y)
};

inline constexpr double kEqualityTolerance = 1e-10;
inline constexpr double kStrictTolerance = 1e-8;

/// True iff x majorizes y: equal totals and every descending prefix sum of x
/// dominates the one of y.
inline bool majorizes(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ConfigError("majorizes: length mismatch");
  std::vector<double> xs(x.begin(), x.end()), ys(y.begin(), y.end());
  std::sort(xs.begin(), xs.end(), std::greater<>());
  std::sort(ys.begin(), ys.end(), std::greater<>());
  double total_x = 0, total_y = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    total_x += xs[i];
    total_y += ys[i];
  }
  if (std::abs(total_x - total_y) > 1e-9) throw ConfigError("majorizes: vectors have different sums");
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    if (sx < sy - 1e-12) return false;
  }
  return true;
}

/// Robin-Hood transfer: moves eps in (0, gap/2] from a larger coordinate to a
/// smaller one. Returns false when all coordinates are equal.
inline bool robin_hood_transfer(std::vector<double>& v, Rng& rng) {
  const std::size_t n = v.size();
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int attempt = 0; attempt < 64; ++attempt) {
    std::size_t i = pick(rng), j = pick(rng);
    if (i == j) continue;
    if (v[i] < v[j]) std::swap(i, j);
    const double gap = v[i] - v[j];
    if (gap <= 1e-9) continue;
    const double eps = 0.5 * gap * (1.0 - unit(rng));
    v[i] -= eps;
    v[j] += eps;
    return true;
  }
  return false;
}

/// x uniform on the simplex (sorted descending), y obtained from x by one to
/// three Robin-Hood transfers. Each transfer strictly lowers the sum of
/// squares, so y is never a permutation of x.
inline MajorizationPair sample_majorization_pair(std::size_t dim, std::uint64_t seed) {
  if (dim < 2) throw ConfigError("sample_majorization_pair: dim must be >= 2");
  Rng rng(seed);
  for (;;) {
    MajorizationPair p;
    p.x = sample_simplex(dim, rng);
    std::sort(p.x.begin(), p.x.end(), std::greater<>());
    p.y = p.x;
    std::uniform_int_distribution<int> transfers(1, 3);
    const int k = transfers(rng);
    bool moved = false;
    for (int i = 0; i < k; ++i) moved = robin_hood_transfer(p.y, rng) || moved;
    if (moved) return p;
  }
}

namespace detail {

template <class F>
CurvatureVerdict classify_differences(std::size_t n, F&& next_pair) {
  CurvatureVerdict v;
  bool convex_ok = true, concave_ok = true;
  bool convex_strict_seen = false, concave_strict_seen = false;
  bool all_convex_strict = true, all_concave_strict = true;
  for (std::size_t k = 0; k < n; ++k) {
    auto [pair, diff] = next_pair(k);
    ++v.evidence_count;
    if (diff < -kEqualityTolerance) {
      convex_ok = false;
      if (!v.convexity_counterexample) v.convexity_counterexample = pair;
    }
    if (diff > kEqualityTolerance) {
      concave_ok = false;
      if (!v.concavity_counterexample) v.concavity_counterexample = pair;
    }
    if (diff > kStrictTolerance) convex_strict_seen = true;
    if (diff < -kStrictTolerance) concave_strict_seen = true;
    if (!(diff > kEqualityTolerance)) all_convex_strict = false;
    if (!(diff < -kEqualityTolerance)) all_concave_strict = false;
  }
  if (convex_ok && concave_ok) {
    v.classification = Curvature::Both;
  } else if (convex_ok && convex_strict_seen) {
    v.classification = Curvature::SchurConvex;
    v.strict = all_convex_strict;
  } else if (concave_ok && concave_strict_seen) {
    v.classification = Curvature::SchurConcave;
    v.strict = all_concave_strict;
  } else if (convex_ok || concave_ok) {
    // one-sided differences that never exceed 1e-8 are indistinguishable from flat
    v.classification = Curvature::Both;
  } else {
    v.classification = Curvature::Neither;
  }
  return v;
}

}  // namespace detail

/// Samples n_pairs majorization pairs and checks the sign of f(x) - f(y).
inline CurvatureVerdict classify_empirical(const AggregatorSpec& spec, std::size_t dim,
                                           std::size_t n_pairs, std::uint64_t seed) {
  if (n_pairs < 1) throw ConfigError("classify_empirical: n_pairs must be >= 1");
  validate(spec);
  return detail::classify_differences(n_pairs, [&](std::size_t k) {
    auto pair = sample_majorization_pair(dim, sub_seed(seed, k));
    const double diff = evaluate(spec, pair.x) - evaluate(spec, pair.y);
    return std::pair{std::move(pair), diff};
  });
}

/// Closed-form Schur classification of each family by its parameter.
inline CurvatureVerdict classify_analytic(const AggregatorSpec& spec) {
  validate(spec);
  CurvatureVerdict v;
  const double t = spec.t;
  switch (spec.family) {
    case Family::Min:
      v.classification = Curvature::SchurConcave;
      break;
    case Family::Max:
      v.classification = Curvature::SchurConvex;
      break;
    case Family::Mean:
      v.classification = Curvature::Both;
      break;
    case Family::PowerSum:
    case Family::PowerMean:
      // Negative-order power means are concave functions as well.
      v.classification = t > 1 ? Curvature::SchurConvex : t < 1 ? Curvature::SchurConcave : Curvature::Both;
      v.strict = t != 1;
      break;
    case Family::LogSumExp:
      v.classification = t > 0 ? Curvature::SchurConvex : Curvature::SchurConcave;
      v.strict = true;
      break;
    case Family::SoftmaxAgg:
      v.classification = t > 0 ? Curvature::SchurConvex : t < 0 ? Curvature::SchurConcave : Curvature::Both;
      v.strict = t != 0;
      break;
  }
  return v;
}

/// Midpoint-convexity probe of g on [0,1]; the Schur property of sum_i g(x_i)
/// follows the convexity of g.
inline CurvatureVerdict sum_form_classify(const std::function<double(double)>& g, std::size_t n_probes,
                                          std::uint64_t seed = 0x5eedULL) {
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  return detail::classify_differences(n_probes, [&](std::size_t) {
    double a = unit(rng), b = unit(rng);
    if (a < b) std::swap(a, b);
    const double ga = g(a), gb = g(b), gm = g(0.5 * (a + b));
    if (!std::isfinite(ga) || !std::isfinite(gb) || !std::isfinite(gm))
      throw DomainError("sum_form_classify: g is not finite on [0,1]");
    // (a, b) majorizes (m, m) as a two-coordinate vector
    const double m = 0.5 * (a + b);
    return std::pair{MajorizationPair{{a, b}, {m, m}}, ga + gb - 2 * gm};
  });
}

struct ConstantSumCheck {
  bool constant = false;
  double max_deviation = 0;  // max |sum - mean sum|
  double stddev = 0;
};

/// Samples admissible N x M allocations and tests whether sum_j T(a_j) is constant.
inline ConstantSumCheck verify_constant_sum(const AggregatorSpec& inner, std::size_t agents, std::size_t tasks,
                                            std::size_t n_samples, std::uint64_t seed) {
  if (agents < 2 || tasks < 2) throw ConfigError("verify_constant_sum: N and M must be >= 2");
  Rng rng(seed);
  std::vector<double> sums;
  sums.reserve(n_samples);
  std::vector<double> rows(agents * tasks), column(agents);
  std::uniform_int_distribution<std::size_t> task_pick(0, tasks - 1);
  std::bernoulli_distribution extreme(0.25);
  for (std::size_t s = 0; s < n_samples; ++s) {
    for (std::size_t i = 0; i < agents; ++i) {
      // mix interior rows with vertices so both kinds of allocation are probed
      const auto row = extreme(rng) ? one_hot(tasks, task_pick(rng)) : sample_simplex(tasks, rng);
      std::copy(row.begin(), row.end(), rows.begin() + static_cast<std::ptrdiff_t>(i * tasks));
    }
    double total = 0;
    for (std::size_t j = 0; j < tasks; ++j) {
      for (std::size_t i = 0; i < agents; ++i) column[i] = rows[i * tasks + j];
      total += evaluate(inner, column);
    }
    sums.push_back(total);
  }
  ConstantSumCheck c;
  double mean = 0;
  for (double v : sums) mean += v;
  mean /= static_cast<double>(sums.size());
  double var = 0;
  for (double v : sums) {
    var += (v - mean) * (v - mean);
    c.max_deviation = std::max(c.max_deviation, std::abs(v - mean));
  }
  c.stddev = std::sqrt(var / static_cast<double>(sums.size()));
  c.constant = c.stddev <= 1e-9;
  return c;
}

}  // namespace hetgain
