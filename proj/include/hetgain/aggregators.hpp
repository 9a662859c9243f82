#pragma once

// Generalized aggregators: symmetric maps from an effort vector to a scalar,
// together with their derivatives in the inputs and in the family parameter t.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hetgain/error.hpp"

namespace hetgain {

enum class Family { Min, Mean, Max, PowerSum, PowerMean, LogSumExp, SoftmaxAgg };

struct AggregatorSpec {
  Family family = Family::Mean;
  double t = 0.0;  // ignored by Min/Mean/Max

  static constexpr AggregatorSpec min() { return {Family::Min, 0.0}; }
  static constexpr AggregatorSpec mean() { return {Family::Mean, 0.0}; }
  static constexpr AggregatorSpec max() { return {Family::Max, 0.0}; }
  static constexpr AggregatorSpec power_sum(double t) { return {Family::PowerSum, t}; }
  static constexpr AggregatorSpec power_mean(double t) { return {Family::PowerMean, t}; }
  static constexpr AggregatorSpec lse(double t) { return {Family::LogSumExp, t}; }
  static constexpr AggregatorSpec softmax(double t) { return {Family::SoftmaxAgg, t}; }

  constexpr bool parametric() const {
    return family != Family::Min && family != Family::Mean && family != Family::Max;
  }
  friend constexpr bool operator==(const AggregatorSpec&, const AggregatorSpec&) = default;
};

inline std::string_view to_string(Family f) {
  switch (f) {
    case Family::Min: return "min";
    case Family::Mean: return "mean";
    case Family::Max: return "max";
    case Family::PowerSum: return "power-sum";
    case Family::PowerMean: return "power-mean";
    case Family::LogSumExp: return "lse";
    case Family::SoftmaxAgg: return "softmax";
  }
  return "?";
}

inline Family parse_family(std::string_view name) {
  if (name == "min") return Family::Min;
  if (name == "mean") return Family::Mean;
  if (name == "max") return Family::Max;
  if (name == "power-sum" || name == "powersum") return Family::PowerSum;
  if (name == "power-mean" || name == "powermean") return Family::PowerMean;
  if (name == "lse" || name == "log-sum-exp" || name == "logsumexp") return Family::LogSumExp;
  if (name == "softmax") return Family::SoftmaxAgg;
  throw ConfigError("unknown aggregator family '" + std::string(name) + "'");
}

inline std::string describe(const AggregatorSpec& s) {
  std::string out(to_string(s.family));
  if (s.parametric()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "(t=%g)", s.t);
    out += buf;
  }
  return out;
}

/// Throws DomainError when t lies outside the family's domain.
inline void validate(const AggregatorSpec& s) {
  if (!std::isfinite(s.t)) throw DomainError("aggregator parameter must be finite");
  switch (s.family) {
    case Family::PowerSum:
      if (!(s.t > 0)) throw DomainError("power-sum requires t > 0");
      break;
    case Family::PowerMean:
    case Family::LogSumExp:
      if (s.t == 0) throw DomainError(std::string(to_string(s.family)) + " requires t != 0");
      break;
    default:
      break;
  }
}

namespace detail {

inline void check_efforts(std::span<const double> x) {
  if (x.empty()) throw DomainError("aggregator input must be non-empty");
  for (double v : x)
    if (!(v >= 0) || !std::isfinite(v)) throw DomainError("efforts must be finite and non-negative");
}

// Ascending copy of the input. Evaluating on the sorted copy makes every
// aggregator bitwise invariant under permutations of its argument.
class SortedCopy {
 public:
  explicit SortedCopy(std::span<const double> x) : n_(x.size()) {
    double* dst = small_.data();
    if (n_ > small_.size()) {
      large_.resize(n_);
      dst = large_.data();
    }
    std::copy(x.begin(), x.end(), dst);
    std::sort(dst, dst + n_);
    data_ = dst;
  }
  SortedCopy(const SortedCopy&) = delete;
  SortedCopy& operator=(const SortedCopy&) = delete;
  std::span<const double> view() const { return {data_, n_}; }

 private:
  std::array<double, 16> small_{};
  std::vector<double> large_;
  const double* data_ = nullptr;
  std::size_t n_;
};

inline double sum(std::span<const double> s) { return std::accumulate(s.begin(), s.end(), 0.0); }

// Softmax weights exp(t x_i) / Z computed after shifting by the extremal
// coordinate so that every exponent is <= 0.
struct SoftWeights {
  double shift = 0;
  double z = 0;       // sum of shifted exponentials
  double mean = 0;    // sum w_i x_i
  double second = 0;  // sum w_i x_i^2
};

inline SoftWeights soft_weights(std::span<const double> sorted, double t) {
  SoftWeights w;
  w.shift = t > 0 ? sorted.back() : sorted.front();
  for (double v : sorted) {
    const double e = std::exp(t * (v - w.shift));
    w.z += e;
    w.mean += e * v;
    w.second += e * v * v;
  }
  w.mean /= w.z;
  w.second /= w.z;
  return w;
}

inline double power_mean_sorted(std::span<const double> s, double t) {
  const double n = static_cast<double>(s.size());
  if (t == 1) return sum(s) / n;
  if (t > 0) {
    const double m = s.back();
    if (m == 0) return 0;
    double acc = 0;
    for (double v : s) acc += std::pow(v / m, t);
    return m * std::pow(acc / n, 1 / t);
  }
  const double m = s.front();
  if (m == 0) return 0;  // limit of a negative-order mean with a zero entry
  double acc = 0;
  for (double v : s) acc += std::pow(v / m, t);
  return m * std::pow(acc / n, 1 / t);
}

inline double evaluate_sorted(const AggregatorSpec& spec, std::span<const double> s) {
  const double n = static_cast<double>(s.size());
  const double t = spec.t;
  switch (spec.family) {
    case Family::Min: return s.front();
    case Family::Max: return s.back();
    case Family::Mean: return sum(s) / n;
    case Family::PowerSum: {
      if (t == 1) return sum(s);
      double acc = 0;
      for (double v : s) acc += std::pow(v, t);
      return acc;
    }
    case Family::PowerMean: return power_mean_sorted(s, t);
    case Family::LogSumExp: {
      const double shift = t > 0 ? s.back() : s.front();
      double acc = 0;
      for (double v : s) acc += std::exp(t * (v - shift));
      return shift + std::log(acc) / t;
    }
    case Family::SoftmaxAgg: {
      if (t == 0) return sum(s) / n;
      return soft_weights(s, t).mean;
    }
  }
  return 0;
}

}  // namespace detail

/// f_t(x) for the given family. Min/Mean/Max ignore t; Mean is the normalized sum.
inline double evaluate(const AggregatorSpec& spec, std::span<const double> x) {
  validate(spec);
  detail::check_efforts(x);
  detail::SortedCopy sorted(x);
  return detail::evaluate_sorted(spec, sorted.view());
}

/// Analytic partial derivatives df/dx_i. Min and Max return the indicator of
/// the extremal coordinate, split equally among exact ties.
inline std::vector<double> gradient_input(const AggregatorSpec& spec, std::span<const double> x) {
  validate(spec);
  detail::check_efforts(x);
  const std::size_t n = x.size();
  const double nd = static_cast<double>(n);
  const double t = spec.t;
  std::vector<double> g(n, 0.0);
  switch (spec.family) {
    case Family::Min:
    case Family::Max: {
      const auto it = spec.family == Family::Min ? std::min_element(x.begin(), x.end())
                                                 : std::max_element(x.begin(), x.end());
      const double target = *it;
      const auto ties = static_cast<double>(std::count(x.begin(), x.end(), target));
      for (std::size_t i = 0; i < n; ++i)
        if (x[i] == target) g[i] = 1.0 / ties;
      break;
    }
    case Family::Mean:
      std::fill(g.begin(), g.end(), 1.0 / nd);
      break;
    case Family::PowerSum:
      for (std::size_t i = 0; i < n; ++i) g[i] = t == 1 ? 1.0 : t * std::pow(x[i], t - 1);
      break;
    case Family::PowerMean: {
      if (t == 1) {
        std::fill(g.begin(), g.end(), 1.0 / nd);
        break;
      }
      // dM/dx_i = (x_i / M)^(t-1) / N
      detail::SortedCopy sorted(x);
      const double m = detail::power_mean_sorted(sorted.view(), t);
      for (std::size_t i = 0; i < n; ++i) g[i] = std::pow(x[i] / m, t - 1) / nd;
      break;
    }
    case Family::LogSumExp: {
      detail::SortedCopy sorted(x);
      const auto w = detail::soft_weights(sorted.view(), t);
      for (std::size_t i = 0; i < n; ++i) g[i] = std::exp(t * (x[i] - w.shift)) / w.z;
      break;
    }
    case Family::SoftmaxAgg: {
      if (t == 0) {
        // w_i (1 + t (x_i - f)) with uniform weights
        std::fill(g.begin(), g.end(), 1.0 / nd);
        break;
      }
      detail::SortedCopy sorted(x);
      const auto w = detail::soft_weights(sorted.view(), t);
      for (std::size_t i = 0; i < n; ++i) {
        const double wi = std::exp(t * (x[i] - w.shift)) / w.z;
        g[i] = wi * (1 + t * (x[i] - w.mean));
      }
      break;
    }
  }
  return g;
}

/// Analytic df_t/dt for the parametric families. Zero entries contribute
/// nothing to the x^t ln x terms of the power families.
inline double gradient_parameter(const AggregatorSpec& spec, std::span<const double> x) {
  validate(spec);
  detail::check_efforts(x);
  if (!spec.parametric())
    throw DomainError(std::string(to_string(spec.family)) + " has no parameter to differentiate");
  detail::SortedCopy sorted(x);
  const auto s = sorted.view();
  const double t = spec.t;
  switch (spec.family) {
    case Family::PowerSum: {
      double acc = 0;
      for (double v : s)
        if (v > 0) acc += std::pow(v, t) * std::log(v);
      return acc;
    }
    case Family::PowerMean: {
      // M = S^(1/t), S = mean(x^t)
      // dM/dt = M (S'/(t S) - ln S / t^2)
      const double m = detail::power_mean_sorted(s, t);
      if (m == 0) return 0;
      const double nd = static_cast<double>(s.size());
      // Work with ratios to M so the terms stay bounded for large |t|.
      double ratio = 0, ratio_log = 0;
      for (double v : s) {
        if (v == 0) continue;
        const double r = std::pow(v / m, t);
        ratio += r;
        ratio_log += r * std::log(v / m);
      }
      ratio /= nd;
      ratio_log /= nd;
      // S = M^t * ratio with ratio == 1, so the derivative reduces to M * ratio_log / t.
      return m * ratio_log / (t * ratio);
    }
    case Family::LogSumExp: {
      const auto w = detail::soft_weights(s, t);
      const double lse = w.shift + std::log(w.z) / t;
      return (w.mean - lse) / t;
    }
    case Family::SoftmaxAgg: {
      if (t == 0) {
        const double nd = static_cast<double>(s.size());
        const double mu = detail::sum(s) / nd;
        double var = 0;
        for (double v : s) var += (v - mu) * (v - mu);
        return var / nd;
      }
      const auto w = detail::soft_weights(s, t);
      return std::max(0.0, w.second - w.mean * w.mean);
    }
    default:
      break;
  }
  return 0;
}

/// Which of {min, mean, max} a family approaches in each parameter regime.
enum class Extreme { Min, Mean, Max };

inline std::string_view to_string(Extreme e) {
  switch (e) {
    case Extreme::Min: return "min";
    case Extreme::Mean: return "mean";
    case Extreme::Max: return "max";
  }
  return "?";
}

struct LimitProbe {
  Extreme nearest = Extreme::Mean;
  double value = 0;     // f_t(x) at the probe parameter
  double distance = 0;  // |value - nearest extreme|
  bool within_tolerance = false;
};

struct LimitReport {
  std::optional<LimitProbe> plus_infinity;   // probed at t = +50
  std::optional<LimitProbe> neutral;         // t = 0 (softmax) or t = 1 (power mean)
  std::optional<LimitProbe> minus_infinity;  // probed at t = -50
};

inline constexpr double kLimitProbe = 50.0;
inline constexpr double kLimitTolerance = 1e-6;

/// Probes the family at t = +/-50 and at its neutral parameter and reports
/// the nearest of min/mean/max. Families without a regime leave it empty.
inline LimitReport limit_identity_check(Family family, std::span<const double> x) {
  detail::check_efforts(x);
  const double lo = *std::min_element(x.begin(), x.end());
  const double hi = *std::max_element(x.begin(), x.end());
  const double mu = detail::sum(detail::SortedCopy(x).view()) / static_cast<double>(x.size());

  auto probe = [&](double t) {
    LimitProbe p;
    p.value = evaluate({family, t}, x);
    const std::array<std::pair<Extreme, double>, 3> candidates{
        {{Extreme::Min, lo}, {Extreme::Mean, mu}, {Extreme::Max, hi}}};
    p.distance = INFINITY;
    for (const auto& [e, v] : candidates) {
      const double d = std::abs(p.value - v);
      if (d < p.distance) {
        p.distance = d;
        p.nearest = e;
      }
    }
    p.within_tolerance = p.distance <= kLimitTolerance;
    return p;
  };

  LimitReport r;
  switch (family) {
    case Family::SoftmaxAgg:
      r.plus_infinity = probe(kLimitProbe);
      r.neutral = probe(0.0);
      r.minus_infinity = probe(-kLimitProbe);
      break;
    case Family::PowerMean:
      r.plus_infinity = probe(kLimitProbe);
      r.neutral = probe(1.0);
      r.minus_infinity = probe(-kLimitProbe);
      break;
    case Family::LogSumExp:
      r.plus_infinity = probe(kLimitProbe);
      r.minus_infinity = probe(-kLimitProbe);
      break;
    default:
      break;
  }
  return r;
}

}  // namespace hetgain
