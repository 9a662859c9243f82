#pragma once

// Heterogeneity gain dR = R_het - R_hom: closed forms for the {min, mean, max}
// pairs, exact discrete enumeration, multi-start projected-gradient search for
// continuous efforts, the constructive heterogenization of a homogeneous point,
// softmax lower bounds, and the Blotto / level-based foraging case studies.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hetgain/aggregators.hpp"
#include "hetgain/error.hpp"
#include "hetgain/reward.hpp"
#include "hetgain/simplex.hpp"

namespace hetgain {

struct GainReport {
  std::optional<double> delta_r_theory;
  std::optional<double> delta_r_bruteforce;
  std::optional<double> delta_r_optimized;
  double r_hom = 0;
  double r_het = 0;
  std::vector<double> hom_argmax;
  AllocationMatrix het_argmax;
  std::string method;
  std::vector<std::uint64_t> seeds;
  std::size_t iterations = 0;
  bool hom_trivial = false;  // best homogeneous point within 1e-6 of a one-hot vector
};

// ---------------------------------------------------------------------------
// closed forms

namespace detail {

inline bool is_extreme(Family f) { return f == Family::Min || f == Family::Mean || f == Family::Max; }

}  // namespace detail

/// Gain for U, T in {min, mean, max}. Written as R_het - R_hom so that the
/// discrete values coincide bitwise with exact enumeration.
inline double closed_form_gain(Family outer, Family inner, AllocationMode mode, std::size_t agents,
                               std::size_t tasks) {
  if (!detail::is_extreme(outer) || !detail::is_extreme(inner))
    throw ConfigError("closed-form gains exist only for min, mean and max");
  if (agents < 1 || tasks < 1) throw ConfigError("closed_form_gain: N and M must be >= 1");
  if (tasks == 1) return 0.0;  // a single task leaves nothing to specialize on
  const double n = static_cast<double>(agents), m = static_cast<double>(tasks);
  const double covered = static_cast<double>(std::min(agents, tasks));
  if (mode == AllocationMode::Discrete) {
    if (outer == Family::Min && inner == Family::Mean) return std::floor(n / m) / n - 0.0;
    if (outer == Family::Min && inner == Family::Max) return agents >= tasks ? 1.0 - 0.0 : 0.0;
    if (outer == Family::Mean && inner == Family::Max) return covered / m - 1.0 / m;
    return 0.0;
  }
  if (outer == Family::Min && inner == Family::Max) {
    // each agent can hold at most floor(1/v) tasks at level v
    const double per_agent = std::ceil(m / n);
    return 1.0 / per_agent - 1.0 / m;
  }
  if (outer == Family::Mean && inner == Family::Max) return covered / m - 1.0 / m;
  return 0.0;
}

// ---------------------------------------------------------------------------
// exact discrete enumeration over compositions

inline double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  double r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(r);
}

inline constexpr double kCompositionGuard = 1e7;

namespace detail {

// Calls visit(counts) for every composition of n into m non-negative parts.
template <class F>
void for_each_composition(std::size_t n, std::size_t m, F&& visit) {
  std::vector<std::size_t> counts(m, 0);
  counts[m - 1] = n;
  for (;;) {
    visit(std::span<const std::size_t>(counts));
    // next composition in colex order: move one unit leftwards
    std::size_t j = m - 1;
    while (j > 0 && counts[j] == 0) --j;
    if (j == 0) return;
    const std::size_t moved = counts[j];
    counts[j] = 0;
    counts[j - 1] += 1;
    counts[m - 1] = moved - 1;
  }
}

inline AllocationMatrix allocation_from_counts(std::span<const std::size_t> counts, std::size_t agents) {
  std::vector<std::size_t> task_of(agents);
  std::size_t i = 0;
  for (std::size_t j = 0; j < counts.size(); ++j)
    for (std::size_t c = 0; c < counts[j]; ++c) task_of[i++] = j;
  return AllocationMatrix::from_assignment(task_of, counts.size());
}

}  // namespace detail

/// Exact discrete gain. By symmetry of T only the number of agents on each
/// task matters, so the search runs over C(N+M-1, M-1) compositions.
inline GainReport brute_force_gain_discrete(const RewardStructure& s) {
  validate(s);
  const double count = binomial(s.agents + s.tasks - 1, s.tasks - 1);
  if (count > kCompositionGuard)
    throw SizeGuardError("discrete enumeration needs " + std::to_string(static_cast<long long>(count)) +
                         " compositions (limit 1e7)");
  const std::size_t n = s.agents;
  // a column with k ones and N - k zeros has a score that depends on k only
  std::vector<double> score_of(n + 1);
  std::vector<double> column(n);
  for (std::size_t k = 0; k <= n; ++k) {
    for (std::size_t i = 0; i < n; ++i) column[i] = i < k ? 1.0 : 0.0;
    score_of[k] = evaluate(s.inner, column);
  }
  std::vector<double> scores(s.tasks);
  auto reward = [&](std::span<const std::size_t> counts) {
    for (std::size_t j = 0; j < s.tasks; ++j) scores[j] = score_of[counts[j]];
    return evaluate(s.outer, scores);
  };

  GainReport r;
  r.method = "composition-enumeration";
  r.r_het = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> best;
  detail::for_each_composition(n, s.tasks, [&](std::span<const std::size_t> counts) {
    ++r.iterations;
    const double v = reward(counts);
    if (v > r.r_het) {
      r.r_het = v;
      best.assign(counts.begin(), counts.end());
    }
  });
  r.r_hom = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> same(s.tasks, 0);
  for (std::size_t j = 0; j < s.tasks; ++j) {
    std::fill(same.begin(), same.end(), 0);
    same[j] = n;
    const double v = reward(same);
    if (v > r.r_hom) {
      r.r_hom = v;
      r.hom_argmax = one_hot(s.tasks, j);
    }
  }
  r.het_argmax = detail::allocation_from_counts(best, n);
  r.delta_r_bruteforce = r.r_het - r.r_hom;
  r.hom_trivial = true;
  return r;
}

// ---------------------------------------------------------------------------
// continuous optimization

/// Thm-3.1-style heterogenization: floor(N c_j) agents devote everything to
/// task j, the fractional remainders are packed agent by agent with overflow.
inline AllocationMatrix construct_het_from_hom(std::span<const double> c, std::size_t agents) {
  const std::size_t m = c.size();
  if (m == 0 || agents == 0) throw ConfigError("construct_het_from_hom: empty input");
  const double n = static_cast<double>(agents);
  AllocationMatrix a(agents, m);
  std::vector<double> frac(m);
  std::size_t next = 0;
  for (std::size_t j = 0; j < m; ++j) {
    double mass = n * c[j];
    double whole = std::floor(mass);
    // snap values such as 0.9999999999 that are integral up to rounding
    if (mass - whole > 1 - 1e-12) whole += 1;
    frac[j] = std::max(0.0, mass - whole);
    if (frac[j] < 1e-12) frac[j] = 0;
    for (std::size_t k = 0; k < static_cast<std::size_t>(whole) && next < agents; ++k) a(next++, j) = 1.0;
  }
  double room = 1.0;
  for (std::size_t j = 0; j < m && next < agents; ++j) {
    double left = frac[j];
    while (left > 0 && next < agents) {
      const double put = std::min(left, room);
      a(next, j) += put;
      left -= put;
      room -= put;
      if (room <= 1e-12) {
        // close the row exactly so it sums to one
        double total = 0;
        for (double v : a.row(next)) total += v;
        a(next, j) += 1.0 - total;
        ++next;
        room = 1.0;
      }
      if (left < 1e-12) left = 0;
    }
  }
  // rounding can leave the last agent short or unassigned; give it the remainder of the largest task
  for (; next < agents; ++next) {
    double total = 0;
    for (double v : a.row(next)) total += v;
    const std::size_t jmax = static_cast<std::size_t>(std::max_element(c.begin(), c.end()) - c.begin());
    a(next, jmax) += 1.0 - total;
  }
  return a;
}

struct OptimizerOptions {
  double step = 0.1;
  std::size_t max_iterations = 2000;
  std::size_t restarts = 32;
  double lattice_resolution = 0.02;  // homogeneous lattice refinement when M <= 3
  std::uint64_t seed = 0;
};

/// Maximize value(x) over `rows` independent copies of the M-simplex.
/// x is row-major rows x cols; gradient is optional.
struct SimplexProblem {
  std::size_t rows = 1;
  std::size_t cols = 1;
  std::function<double(std::span<const double>)> value;
  std::function<void(std::span<const double>, std::span<double>)> gradient;
};

struct AscentResult {
  std::vector<double> x;
  double value = -std::numeric_limits<double>::infinity();
  std::size_t iterations = 0;
};

namespace detail {

inline void project_rows(std::span<double> x, std::size_t rows, std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i) project_to_simplex(x.subspan(i * cols, cols));
}

inline void clip_gradient(std::span<double> g, double max_norm) {
  double norm2 = 0;
  for (double& v : g) {
    if (!std::isfinite(v)) v = v > 0 ? 1e6 : -1e6;  // x^t with t < 1 has an infinite slope at 0
    norm2 += v * v;
  }
  const double norm = std::sqrt(norm2);
  if (norm > max_norm)
    for (double& v : g) v *= max_norm / norm;
}

// Projected gradient ascent with backtracking (halving) on the step.
inline void gradient_ascent(const SimplexProblem& p, AscentResult& r, const OptimizerOptions& o) {
  if (!p.gradient) return;
  const std::size_t dim = p.rows * p.cols;
  std::vector<double> g(dim), trial(dim);
  double eta = o.step;
  std::size_t flat = 0;
  for (std::size_t it = 0; it < o.max_iterations; ++it) {
    ++r.iterations;
    p.gradient(r.x, g);
    clip_gradient(g, 10.0);
    bool moved = false;
    while (eta > 1e-12) {
      for (std::size_t k = 0; k < dim; ++k) trial[k] = r.x[k] + eta * g[k];
      project_rows(trial, p.rows, p.cols);
      const double v = p.value(trial);
      if (v > r.value) {
        flat = v - r.value < 1e-13 ? flat + 1 : 0;
        r.value = v;
        r.x.swap(trial);
        moved = true;
        eta = std::min(2 * eta, o.step);
        break;
      }
      eta *= 0.5;
    }
    if (!moved || flat >= 20) break;
  }
}

// Pattern search over single-row transfers of mass between two tasks.
// Handles kinks of min/max objectives where the subgradient stalls.
inline void transfer_polish(const SimplexProblem& p, AscentResult& r, std::size_t max_passes = 200) {
  static constexpr double kScales[] = {0.25, 0.05, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
  std::vector<double> trial = r.x;
  for (double delta : kScales) {
    for (std::size_t pass = 0; pass < max_passes; ++pass) {
      bool improved = false;
      for (std::size_t i = 0; i < p.rows; ++i) {
        for (std::size_t from = 0; from < p.cols; ++from) {
          for (std::size_t to = 0; to < p.cols; ++to) {
            if (from == to) continue;
            const std::size_t a = i * p.cols + from, b = i * p.cols + to;
            const double move = std::min(delta, r.x[a]);
            if (move <= 0) continue;
            trial[a] = r.x[a] - move;
            trial[b] = r.x[b] + move;
            const double v = p.value(trial);
            if (v > r.value + 1e-15) {
              r.value = v;
              r.x[a] = trial[a];
              r.x[b] = trial[b];
              improved = true;
            } else {
              trial[a] = r.x[a];
              trial[b] = r.x[b];
            }
            ++r.iterations;
          }
        }
      }
      if (!improved) break;
    }
  }
}

// Smooth stand-in for Min/Max: log-mean-exp (1/b) ln(mean e^{b x}), which lies
// between the mean and the max (b > 0) or the min and the mean (b < 0), so
// scores stay non-negative. Other families pass through unchanged.
struct SmoothedAggregator {
  AggregatorSpec spec;
  double offset = 0;

  SmoothedAggregator(const AggregatorSpec& s, double beta, std::size_t n) : spec(s) {
    if (beta <= 0) return;
    const double shift = std::log(static_cast<double>(n)) / beta;
    if (s.family == Family::Max) {
      spec = AggregatorSpec::lse(beta);
      offset = -shift;
    } else if (s.family == Family::Min) {
      spec = AggregatorSpec::lse(-beta);
      offset = shift;
    }
  }
  double value(std::span<const double> x) const { return std::max(0.0, evaluate(spec, x) + offset); }
};

inline bool has_kink(const RewardStructure& s) {
  auto kinked = [](Family f) { return f == Family::Min || f == Family::Max; };
  return kinked(s.outer.family) || kinked(s.inner.family);
}

// Deterministic ordering of candidates: larger value, then lexicographically smaller argmax.
inline bool better(const AscentResult& a, const AscentResult& b) {
  if (a.value != b.value) return a.value > b.value;
  return std::lexicographical_compare(a.x.begin(), a.x.end(), b.x.begin(), b.x.end());
}

inline void lattice_points(std::size_t m, std::size_t steps, std::vector<std::vector<double>>& out) {
  for_each_composition(steps, m, [&](std::span<const std::size_t> counts) {
    std::vector<double> c(m);
    for (std::size_t j = 0; j < m; ++j) c[j] = static_cast<double>(counts[j]) / static_cast<double>(steps);
    out.push_back(std::move(c));
  });
}

}  // namespace detail

/// Local ascent from x0: projected gradient (when available) followed by
/// transfer polishing.
inline AscentResult ascend(const SimplexProblem& p, std::vector<double> x0, const OptimizerOptions& o) {
  AscentResult r;
  r.x = std::move(x0);
  detail::project_rows(r.x, p.rows, p.cols);
  r.value = p.value(r.x);
  detail::gradient_ascent(p, r, o);
  detail::transfer_polish(p, r);
  return r;
}

namespace detail {

// Builds the homogeneous and heterogeneous problems for a reward structure,
// optionally with Min/Max smoothed at inverse temperature beta (0 = exact).
inline SimplexProblem het_problem(const RewardStructure& s, double beta) {
  SimplexProblem p;
  p.rows = s.agents;
  p.cols = s.tasks;
  if (beta <= 0) {
    p.value = [s](std::span<const double> a) { return reward_unchecked(s, a); };
    p.gradient = [s](std::span<const double> a, std::span<double> g) { reward_gradient(s, a, g); };
    return p;
  }
  const SmoothedAggregator inner(s.inner, beta, s.agents), outer(s.outer, beta, s.tasks);
  const std::size_t n = s.agents, m = s.tasks;
  p.value = [inner, outer, n, m](std::span<const double> a) {
    std::vector<double> column(n), scores(m);
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t i = 0; i < n; ++i) column[i] = a[i * m + j];
      scores[j] = inner.value(column);
    }
    return outer.value(scores);
  };
  p.gradient = [inner, outer, n, m](std::span<const double> a, std::span<double> g) {
    std::vector<double> column(n), scores(m);
    std::vector<std::vector<double>> inner_grads(m);
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t i = 0; i < n; ++i) column[i] = a[i * m + j];
      scores[j] = inner.value(column);
      inner_grads[j] = gradient_input(inner.spec, column);
    }
    const auto outer_grad = gradient_input(outer.spec, scores);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) g[i * m + j] = outer_grad[j] * inner_grads[j][i];
  };
  return p;
}

inline SimplexProblem hom_problem(const RewardStructure& s, double beta) {
  SimplexProblem het = het_problem(s, beta);
  SimplexProblem p;
  p.rows = 1;
  p.cols = s.tasks;
  const std::size_t n = s.agents, m = s.tasks;
  p.value = [het, n, m](std::span<const double> c) {
    thread_local std::vector<double> a;
    a.resize(n * m);
    for (std::size_t i = 0; i < n; ++i) std::copy(c.begin(), c.end(), a.begin() + static_cast<std::ptrdiff_t>(i * m));
    return het.value(a);
  };
  p.gradient = [het, n, m](std::span<const double> c, std::span<double> g) {
    std::vector<double> a(n * m), ga(n * m);
    for (std::size_t i = 0; i < n; ++i) std::copy(c.begin(), c.end(), a.begin() + static_cast<std::ptrdiff_t>(i * m));
    het.gradient(a, ga);
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) g[j] += ga[i * m + j];
  };
  return p;
}

// Ascent with continuation: smoothed stages first when the structure has
// kinks, then the exact objective.
template <class MakeProblem>
AscentResult staged_ascent(const RewardStructure& s, MakeProblem make, std::vector<double> x0,
                           const OptimizerOptions& o) {
  std::size_t iterations = 0;
  if (has_kink(s)) {
    for (double beta : {10.0, 40.0, 160.0, 640.0}) {
      const SimplexProblem smooth = make(s, beta);
      AscentResult r;
      r.x = std::move(x0);
      project_rows(r.x, smooth.rows, smooth.cols);
      r.value = smooth.value(r.x);
      gradient_ascent(smooth, r, o);
      iterations += r.iterations;
      x0 = std::move(r.x);
    }
  }
  const SimplexProblem exact = make(s, 0.0);
  AscentResult r = ascend(exact, std::move(x0), o);
  r.iterations += iterations;
  return r;
}

// Best of the candidate starts after ascent; candidates are evaluated as-is too,
// so the result is never worse than any start.
template <class MakeProblem>
AscentResult best_of(const RewardStructure& s, MakeProblem make, const std::vector<std::vector<double>>& starts,
                     const OptimizerOptions& o, std::size_t& iterations) {
  const SimplexProblem exact = make(s, 0.0);
  AscentResult best;
  for (const auto& x0 : starts) {
    AscentResult as_is;
    as_is.x = x0;
    as_is.value = exact.value(x0);
    if (better(as_is, best)) best = as_is;
    AscentResult r = staged_ascent(s, make, x0, o);
    iterations += r.iterations;
    if (better(r, best)) best = std::move(r);
  }
  return best;
}

inline bool near_one_hot(std::span<const double> c, double tol = 1e-6) {
  return std::any_of(c.begin(), c.end(), [&](double v) { return v >= 1 - tol; });
}

}  // namespace detail

/// Multi-start search for R_hom (on one M-simplex) and R_het (on N row simplices).
inline GainReport optimize_gain_continuous(const RewardStructure& s, const OptimizerOptions& o = {}) {
  validate(s);
  const std::size_t n = s.agents, m = s.tasks;
  GainReport r;
  r.method = "projected-gradient-multistart";
  r.seeds = {o.seed};

  // homogeneous: uniform, one-hots, random, and the best lattice point for small M
  std::vector<std::vector<double>> hom_starts;
  hom_starts.push_back(uniform_point(m));
  for (std::size_t j = 0; j < m; ++j) hom_starts.push_back(one_hot(m, j));
  for (std::size_t k = 0; k < o.restarts; ++k) {
    Rng rng(sub_seed(o.seed, k));
    hom_starts.push_back(sample_simplex(m, rng));
  }
  if (m <= 3 && o.lattice_resolution > 0) {
    const auto steps = static_cast<std::size_t>(std::llround(1.0 / o.lattice_resolution));
    std::vector<std::vector<double>> lattice;
    detail::lattice_points(m, steps, lattice);
    const SimplexProblem exact = detail::hom_problem(s, 0.0);
    AscentResult top;
    for (auto& c : lattice) {
      AscentResult cand;
      cand.value = exact.value(c);
      cand.x = std::move(c);
      if (detail::better(cand, top)) top = std::move(cand);
    }
    hom_starts.push_back(top.x);
  }
  const AscentResult hom = detail::best_of(s, detail::hom_problem, hom_starts, o, r.iterations);
  r.r_hom = hom.value;
  r.hom_argmax = hom.x;
  r.hom_trivial = detail::near_one_hot(hom.x);

  // heterogeneous: warm starts from the homogeneous optimum and the known constructions
  std::vector<std::vector<double>> het_starts;
  const auto replicated = AllocationMatrix::homogeneous(hom.x, n);
  het_starts.emplace_back(replicated.data().begin(), replicated.data().end());
  const auto trivial = AllocationMatrix::homogeneous(one_hot(m, 0), n);
  het_starts.emplace_back(trivial.data().begin(), trivial.data().end());
  AllocationMatrix spread(n, m);
  for (std::size_t i = 0; i < n; ++i) spread(i, i % m) = 1.0;
  het_starts.emplace_back(spread.data().begin(), spread.data().end());
  const auto built = construct_het_from_hom(hom.x, n);
  het_starts.emplace_back(built.data().begin(), built.data().end());
  for (std::size_t k = 0; k < o.restarts; ++k) {
    Rng rng(sub_seed(o.seed ^ 0x6865746572ULL, k));
    std::vector<double> a;
    a.reserve(n * m);
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = sample_simplex(m, rng);
      a.insert(a.end(), row.begin(), row.end());
    }
    het_starts.push_back(std::move(a));
  }
  const AscentResult het = detail::best_of(s, detail::het_problem, het_starts, o, r.iterations);
  // the replicated homogeneous optimum is among the starts, so het.value >= r_hom
  r.r_het = het.value;
  r.het_argmax = AllocationMatrix(n, m);
  std::copy(het.x.begin(), het.x.end(), r.het_argmax.data().begin());
  r.delta_r_optimized = r.r_het - r.r_hom;
  return r;
}

// ---------------------------------------------------------------------------
// softmax bounds

enum class BoundRegime { ExactZero, LowerBoundNegativeOuter, LowerBoundPositiveOuter };

inline std::string_view to_string(BoundRegime r) {
  switch (r) {
    case BoundRegime::ExactZero: return "exact-zero";
    case BoundRegime::LowerBoundNegativeOuter: return "lower-bound-outer-nonpositive";
    case BoundRegime::LowerBoundPositiveOuter: return "lower-bound-outer-nonnegative";
  }
  return "?";
}

struct SoftmaxBound {
  BoundRegime regime = BoundRegime::ExactZero;
  double bound = 0;
};

/// e^t / (e^t + N - 1), evaluated without overflow.
inline double softmax_sigma(double t, std::size_t agents) {
  const double rest = static_cast<double>(agents) - 1;
  if (t > 0) return 1.0 / (1.0 + rest * std::exp(-t));
  const double e = std::exp(t);
  return e / (e + rest);
}

/// Gain bounds for softmax inner (t) and outer (tau) aggregators with N = M.
inline SoftmaxBound softmax_gain_bound(double t, double tau, std::size_t agents) {
  if (agents < 2) throw ConfigError("softmax_gain_bound: N must be >= 2");
  if (t <= 0) return {BoundRegime::ExactZero, 0.0};
  if (tau <= 0) return {BoundRegime::LowerBoundNegativeOuter, softmax_sigma(t, agents) - 1.0 / static_cast<double>(agents)};
  return {BoundRegime::LowerBoundPositiveOuter, std::max(softmax_sigma(t, agents) - softmax_sigma(tau, agents), 0.0)};
}

// ---------------------------------------------------------------------------
// Colonel Blotto against a fixed stochastic adversary

/// v_j times the fraction of adversary allocations strictly below s_j.
inline double blotto_task_score(double force, std::span<const double> adversary, double value) {
  if (adversary.empty()) throw DomainError("blotto_task_score: adversary sample set is empty");
  std::size_t wins = 0;
  for (double a : adversary) wins += force > a ? 1 : 0;
  return value * static_cast<double>(wins) / static_cast<double>(adversary.size());
}

struct BlottoAdversary {
  // samples[k][j]: troops on battlefield j in adversary draw k
  std::vector<std::vector<double>> samples;

  static BlottoAdversary deterministic(std::vector<double> allocation) { return {{std::move(allocation)}}; }

  /// Draws `count` allocations uniformly from budget times the simplex.
  static BlottoAdversary uniform_simplex(std::size_t tasks, std::size_t count, std::uint64_t seed,
                                         double budget = 1.0) {
    Rng rng(seed);
    BlottoAdversary a;
    a.samples.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
      auto x = sample_simplex(tasks, rng);
      for (double& v : x) v *= budget;
      a.samples.push_back(std::move(x));
    }
    return a;
  }
};

inline GainReport blotto_gain(std::size_t agents, std::size_t tasks, const BlottoAdversary& adversary,
                              std::vector<double> values = {}, const OptimizerOptions& o = {}) {
  if (agents < 1 || tasks < 1) throw ConfigError("blotto_gain: N and M must be >= 1");
  if (adversary.samples.empty()) throw DomainError("blotto_gain: adversary sample set is empty");
  for (const auto& a : adversary.samples)
    if (a.size() != tasks) throw ConfigError("blotto_gain: adversary allocation has the wrong length");
  if (values.empty()) values.assign(tasks, 1.0);
  if (values.size() != tasks) throw ConfigError("blotto_gain: need one value per battlefield");

  // per battlefield, adversary troops sorted so a win count is a binary search
  std::vector<std::vector<double>> sorted(tasks);
  for (std::size_t j = 0; j < tasks; ++j) {
    for (const auto& a : adversary.samples) sorted[j].push_back(a[j]);
    std::sort(sorted[j].begin(), sorted[j].end());
  }
  const double count = static_cast<double>(adversary.samples.size());
  auto reward_of_forces = [sorted, values, count](std::span<const double> force) {
    double total = 0;
    for (std::size_t j = 0; j < force.size(); ++j) {
      const auto wins = std::lower_bound(sorted[j].begin(), sorted[j].end(), force[j]) - sorted[j].begin();
      total += values[j] * static_cast<double>(wins) / count;
    }
    return total;
  };

  SimplexProblem het;
  het.rows = agents;
  het.cols = tasks;
  het.value = [=](std::span<const double> a) {
    std::vector<double> force(tasks, 0.0);
    for (std::size_t i = 0; i < agents; ++i)
      for (std::size_t j = 0; j < tasks; ++j) force[j] += a[i * tasks + j];
    return reward_of_forces(force);
  };
  SimplexProblem hom;
  hom.rows = 1;
  hom.cols = tasks;
  hom.value = [=](std::span<const double> c) {
    std::vector<double> force(tasks);
    for (std::size_t j = 0; j < tasks; ++j) force[j] = static_cast<double>(agents) * c[j];
    return reward_of_forces(force);
  };

  GainReport r;
  r.method = "blotto-pattern-search";
  r.seeds = {o.seed};
  std::vector<std::vector<double>> hom_starts{uniform_point(tasks)};
  for (std::size_t j = 0; j < tasks; ++j) hom_starts.push_back(one_hot(tasks, j));
  if (tasks <= 3) {
    const auto steps = static_cast<std::size_t>(std::llround(1.0 / o.lattice_resolution));
    detail::lattice_points(tasks, steps, hom_starts);
  }
  for (std::size_t k = 0; k < o.restarts; ++k) {
    Rng rng(sub_seed(o.seed, k));
    hom_starts.push_back(sample_simplex(tasks, rng));
  }
  AscentResult best_hom;
  for (auto& c : hom_starts) {
    AscentResult cand;
    cand.value = hom.value(c);
    cand.x = c;
    if (detail::better(cand, best_hom)) best_hom = std::move(cand);
  }
  best_hom = ascend(hom, best_hom.x, o);
  r.iterations += best_hom.iterations;

  AscentResult best_het;
  {
    const auto rep = AllocationMatrix::homogeneous(best_hom.x, agents);
    best_het.x.assign(rep.data().begin(), rep.data().end());
    best_het.value = het.value(best_het.x);
  }
  for (std::size_t k = 0; k < o.restarts; ++k) {
    Rng rng(sub_seed(o.seed ^ 0x626c6f74ULL, k));
    std::vector<double> a;
    for (std::size_t i = 0; i < agents; ++i) {
      const auto row = sample_simplex(tasks, rng);
      a.insert(a.end(), row.begin(), row.end());
    }
    AscentResult cand = ascend(het, std::move(a), o);
    r.iterations += cand.iterations;
    if (detail::better(cand, best_het)) best_het = std::move(cand);
  }
  // the reward only sees column sums, so the het optimum's normalized column
  // sums are a homogeneous candidate the hom search may have missed
  {
    std::vector<double> c(tasks, 0.0);
    for (std::size_t i = 0; i < agents; ++i)
      for (std::size_t j = 0; j < tasks; ++j) c[j] += best_het.x[i * tasks + j] / static_cast<double>(agents);
    AscentResult cand = ascend(hom, std::move(c), o);
    r.iterations += cand.iterations;
    if (detail::better(cand, best_hom)) best_hom = std::move(cand);
  }
  r.r_hom = best_hom.value;
  r.hom_argmax = best_hom.x;
  r.hom_trivial = detail::near_one_hot(best_hom.x);
  r.r_het = std::max(best_het.value, r.r_hom);
  r.het_argmax = AllocationMatrix(agents, tasks);
  std::copy(best_het.x.begin(), best_het.x.end(), r.het_argmax.data().begin());
  r.delta_r_optimized = r.r_het - r.r_hom;
  r.delta_r_theory = 0.0;
  return r;
}

// ---------------------------------------------------------------------------
// level-based foraging with equal item levels L and unit agent skills

/// Normalized gain dR / (M L) = (min{M, N/L} - 1) / M.
inline double lbf_gain(std::size_t agents, std::size_t tasks, std::size_t level) {
  if (level < 1) throw DomainError("lbf_gain: level must be >= 1");
  if (agents < 1 || tasks < 1) throw ConfigError("lbf_gain: N and M must be >= 1");
  if (agents % level != 0)
    throw DomainError("lbf_gain: level " + std::to_string(level) + " does not divide N = " + std::to_string(agents));
  const std::size_t bundles = agents / level;
  return (static_cast<double>(std::min(tasks, bundles)) - 1.0) / static_cast<double>(tasks);
}

/// Enumerates agent counts per item for the threshold-sum reward
/// sum_j L 1[count_j >= L] and returns the normalized gain dR / (M L).
inline double lbf_gain_enumerated(std::size_t agents, std::size_t tasks, std::size_t level) {
  if (level < 1) throw DomainError("lbf_gain_enumerated: level must be >= 1");
  if (binomial(agents + tasks - 1, tasks - 1) > kCompositionGuard)
    throw SizeGuardError("lbf enumeration exceeds 1e7 compositions");
  const double l = static_cast<double>(level);
  auto reward = [&](std::span<const std::size_t> counts) {
    double total = 0;
    for (std::size_t c : counts) total += c >= level ? l : 0.0;
    return total;
  };
  double het = 0;
  detail::for_each_composition(agents, tasks, [&](std::span<const std::size_t> counts) {
    het = std::max(het, reward(counts));
  });
  std::vector<std::size_t> all_on_one(tasks, 0);
  all_on_one[0] = agents;
  const double hom = reward(all_on_one);
  return (het - hom) / (static_cast<double>(tasks) * l);
}

}  // namespace hetgain
