#pragma once

// Brute-force references for the optimized paths. Nothing here calls into the
// gains optimizer or its enumeration helpers; rewards are recomputed column by
// column through the public aggregator API.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "hetgain/aggregators.hpp"
#include "hetgain/error.hpp"
#include "hetgain/gains.hpp"
#include "hetgain/reward.hpp"

namespace hetgain::oracle {

inline constexpr double kLatticeGuard = 1e8;
inline constexpr double kAssignmentGuard = 1e6;

struct GridSpec {
  double resolution = 0.02;
  std::size_t agents = 1;
  std::size_t tasks = 1;
};

namespace detail {

inline double reward_by_columns(const RewardStructure& s, const std::vector<const std::vector<double>*>& rows,
                                std::vector<double>& column, std::vector<double>& scores) {
  for (std::size_t j = 0; j < s.tasks; ++j) {
    for (std::size_t i = 0; i < s.agents; ++i) column[i] = (*rows[i])[j];
    scores[j] = evaluate(s.inner, column);
  }
  return evaluate(s.outer, scores);
}

// All points k/steps of the M-simplex, built by nested recursion.
inline void simplex_lattice(std::size_t tasks, std::size_t steps, std::vector<double>& prefix,
                            std::size_t remaining, std::vector<std::vector<double>>& out) {
  if (prefix.size() + 1 == tasks) {
    prefix.push_back(static_cast<double>(remaining) / static_cast<double>(steps));
    out.push_back(prefix);
    prefix.pop_back();
    return;
  }
  for (std::size_t k = 0; k <= remaining; ++k) {
    prefix.push_back(static_cast<double>(k) / static_cast<double>(steps));
    simplex_lattice(tasks, steps, prefix, remaining - k, out);
    prefix.pop_back();
  }
}

}  // namespace detail

/// Number of lattice points of the M-simplex at the given number of steps.
inline double lattice_size(std::size_t tasks, std::size_t steps) {
  double r = 1;
  for (std::size_t i = 1; i < tasks; ++i) r = r * static_cast<double>(steps + i) / static_cast<double>(i);
  return std::round(r);
}

/// Exact maxima of R over the lattice: every homogeneous point and every
/// product of per-row lattice points.
inline GainReport grid_gain(const RewardStructure& s, const GridSpec& g) {
  validate(s);
  if (g.agents != s.agents || g.tasks != s.tasks) throw ConfigError("grid_gain: grid dims differ from structure");
  if (!(g.resolution > 0)) throw ConfigError("grid_gain: resolution must be positive");
  const double inv = 1.0 / g.resolution;
  const auto steps = static_cast<std::size_t>(std::llround(inv));
  if (steps == 0 || std::abs(inv - static_cast<double>(steps)) > 1e-6)
    throw ConfigError("grid_gain: 1/resolution must be an integer");
  const double row_points = lattice_size(s.tasks, steps);
  const double total = std::pow(row_points, static_cast<double>(s.agents)) + row_points;
  if (total > kLatticeGuard)
    throw SizeGuardError("grid lattice has " + std::to_string(static_cast<long long>(total)) +
                         " points (limit 1e8)");

  std::vector<std::vector<double>> lattice;
  std::vector<double> prefix;
  detail::simplex_lattice(s.tasks, steps, prefix, steps, lattice);

  GainReport r;
  r.method = "grid-oracle";
  std::vector<double> column(s.agents), scores(s.tasks);
  std::vector<const std::vector<double>*> rows(s.agents);

  r.r_hom = -std::numeric_limits<double>::infinity();
  for (const auto& c : lattice) {
    for (auto& p : rows) p = &c;
    const double v = detail::reward_by_columns(s, rows, column, scores);
    ++r.iterations;
    if (v > r.r_hom) {
      r.r_hom = v;
      r.hom_argmax = c;
    }
  }

  r.r_het = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> index(s.agents, 0), best(s.agents, 0);
  for (;;) {
    for (std::size_t i = 0; i < s.agents; ++i) rows[i] = &lattice[index[i]];
    const double v = detail::reward_by_columns(s, rows, column, scores);
    ++r.iterations;
    if (v > r.r_het) {
      r.r_het = v;
      best = index;
    }
    std::size_t i = 0;
    while (i < s.agents && ++index[i] == lattice.size()) index[i++] = 0;
    if (i == s.agents) break;
  }
  r.het_argmax = AllocationMatrix(s.agents, s.tasks);
  for (std::size_t i = 0; i < s.agents; ++i)
    for (std::size_t j = 0; j < s.tasks; ++j) r.het_argmax(i, j) = lattice[best[i]][j];
  r.hom_trivial = std::any_of(r.hom_argmax.begin(), r.hom_argmax.end(), [](double v) { return v >= 1 - 1e-6; });
  r.delta_r_optimized = r.r_het - r.r_hom;
  return r;
}

/// Enumerates all M^N one-hot assignments directly, without symmetry reduction.
inline GainReport exhaustive_discrete_gain(const RewardStructure& s) {
  validate(s);
  const double count = std::pow(static_cast<double>(s.tasks), static_cast<double>(s.agents));
  if (count > kAssignmentGuard)
    throw SizeGuardError("exhaustive enumeration needs " + std::to_string(static_cast<long long>(count)) +
                         " assignments (limit 1e6)");
  std::vector<std::vector<double>> hots(s.tasks, std::vector<double>(s.tasks, 0.0));
  for (std::size_t j = 0; j < s.tasks; ++j) hots[j][j] = 1.0;

  GainReport r;
  r.method = "exhaustive-assignment";
  std::vector<double> column(s.agents), scores(s.tasks);
  std::vector<const std::vector<double>*> rows(s.agents);
  std::vector<std::size_t> choice(s.agents, 0), best(s.agents, 0);
  r.r_het = -std::numeric_limits<double>::infinity();
  r.r_hom = -std::numeric_limits<double>::infinity();
  for (;;) {
    for (std::size_t i = 0; i < s.agents; ++i) rows[i] = &hots[choice[i]];
    const double v = detail::reward_by_columns(s, rows, column, scores);
    ++r.iterations;
    if (v > r.r_het) {
      r.r_het = v;
      best = choice;
    }
    const bool all_same = std::all_of(choice.begin(), choice.end(), [&](std::size_t c) { return c == choice[0]; });
    if (all_same && v > r.r_hom) {
      r.r_hom = v;
      r.hom_argmax = hots[choice[0]];
    }
    std::size_t i = 0;
    while (i < s.agents && ++choice[i] == s.tasks) choice[i++] = 0;
    if (i == s.agents) break;
  }
  r.het_argmax = AllocationMatrix::from_assignment(best, s.tasks);
  r.hom_trivial = true;
  r.delta_r_bruteforce = r.r_het - r.r_hom;
  return r;
}

/// Central differences of fn at point, one coordinate at a time.
inline std::vector<double> finite_difference(const std::function<double(std::span<const double>)>& fn,
                                             std::span<const double> point, double step = 1e-5) {
  std::vector<double> x(point.begin(), point.end()), g(point.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double saved = x[k];
    x[k] = saved + step;
    const double up = fn(x);
    x[k] = saved - step;
    const double down = fn(x);
    x[k] = saved;
    g[k] = (up - down) / (2 * step);
  }
  return g;
}

/// Scalar convenience overload.
inline double finite_difference(const std::function<double(double)>& fn, double x, double step = 1e-5) {
  return (fn(x + step) - fn(x - step)) / (2 * step);
}

/// Exact gradient of E[R] with respect to each agent's categorical logits,
/// by enumerating all M^N joint task choices. logits[i] belongs to agent i.
inline std::vector<std::vector<double>> exact_categorical_gradient(const RewardStructure& s,
                                                                   const std::vector<std::vector<double>>& logits) {
  const std::size_t n = s.agents, m = s.tasks;
  if (logits.size() != n) throw ConfigError("exact_categorical_gradient: one logit vector per agent required");
  if (std::pow(static_cast<double>(m), static_cast<double>(n)) > kAssignmentGuard)
    throw SizeGuardError("exact_categorical_gradient: M^N exceeds the guard");
  std::vector<std::vector<double>> prob(n, std::vector<double>(m));
  for (std::size_t i = 0; i < n; ++i) {
    double z = 0;
    for (std::size_t k = 0; k < m; ++k) z += std::exp(logits[i][k]);
    for (std::size_t k = 0; k < m; ++k) prob[i][k] = std::exp(logits[i][k]) / z;
  }
  std::vector<std::vector<double>> g(n, std::vector<double>(m, 0.0));
  std::vector<std::size_t> pick(n, 0);
  std::vector<double> a(n * m);
  while (true) {
    std::fill(a.begin(), a.end(), 0.0);
    double p = 1;
    for (std::size_t i = 0; i < n; ++i) {
      a[i * m + pick[i]] = 1.0;
      p *= prob[i][pick[i]];
    }
    // evaluate column by column with the unsorted public entry points
    std::vector<double> scores(m), col(n);
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t i = 0; i < n; ++i) col[i] = a[i * m + j];
      scores[j] = evaluate(s.inner, col);
    }
    const double r = evaluate(s.outer, scores);
    // d log pi_i(k) / d l_ik' = 1[k = k'] - p_ik'
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < m; ++k) g[i][k] += p * r * ((pick[i] == k ? 1.0 : 0.0) - prob[i][k]);
    std::size_t i = 0;
    while (i < n && ++pick[i] == m) pick[i++] = 0;
    if (i == n) break;
  }
  return g;
}

}  // namespace hetgain::oracle
