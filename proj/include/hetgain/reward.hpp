#pragma once

// Effort matrices and the double-aggregation team reward R(A) = U(T(a_1), ..., T(a_M)).

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "hetgain/aggregators.hpp"
#include "hetgain/error.hpp"

namespace hetgain {

enum class AllocationMode { Continuous, Discrete };

inline std::string_view to_string(AllocationMode m) {
  return m == AllocationMode::Continuous ? "continuous" : "discrete";
}

inline AllocationMode parse_mode(std::string_view s) {
  if (s == "continuous") return AllocationMode::Continuous;
  if (s == "discrete") return AllocationMode::Discrete;
  throw ConfigError("unknown allocation mode '" + std::string(s) + "'");
}

/// N x M efforts r_ij, row-major. Rows are agents, columns are tasks.
class AllocationMatrix {
 public:
  AllocationMatrix() = default;
  AllocationMatrix(std::size_t agents, std::size_t tasks, AllocationMode mode = AllocationMode::Continuous)
      : agents_(agents), tasks_(tasks), mode_(mode), r_(agents * tasks, 0.0) {}

  static AllocationMatrix from_rows(const std::vector<std::vector<double>>& rows,
                                    AllocationMode mode = AllocationMode::Continuous) {
    if (rows.empty()) throw ConfigError("allocation needs at least one agent");
    AllocationMatrix a(rows.size(), rows.front().size(), mode);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != a.tasks_) throw ConfigError("allocation rows have different lengths");
      std::copy(rows[i].begin(), rows[i].end(), a.row(i).begin());
    }
    return a;
  }

  /// One-hot rows from a task index per agent.
  static AllocationMatrix from_assignment(std::span<const std::size_t> task_of_agent, std::size_t tasks) {
    AllocationMatrix a(task_of_agent.size(), tasks, AllocationMode::Discrete);
    for (std::size_t i = 0; i < task_of_agent.size(); ++i) {
      if (task_of_agent[i] >= tasks) throw DomainError("task index out of range");
      a(i, task_of_agent[i]) = 1.0;
    }
    return a;
  }

  /// Every agent uses the same effort vector c.
  static AllocationMatrix homogeneous(std::span<const double> c, std::size_t agents) {
    AllocationMatrix a(agents, c.size());
    for (std::size_t i = 0; i < agents; ++i) std::copy(c.begin(), c.end(), a.row(i).begin());
    return a;
  }

  std::size_t agents() const { return agents_; }
  std::size_t tasks() const { return tasks_; }
  AllocationMode mode() const { return mode_; }
  void set_mode(AllocationMode m) { mode_ = m; }

  double& operator()(std::size_t i, std::size_t j) { return r_[i * tasks_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return r_[i * tasks_ + j]; }
  std::span<double> row(std::size_t i) { return {r_.data() + i * tasks_, tasks_}; }
  std::span<const double> row(std::size_t i) const { return {r_.data() + i * tasks_, tasks_}; }
  std::span<double> data() { return r_; }
  std::span<const double> data() const { return r_; }

  std::vector<double> column(std::size_t j) const {
    std::vector<double> c(agents_);
    for (std::size_t i = 0; i < agents_; ++i) c[i] = (*this)(i, j);
    return c;
  }

  std::vector<double> column_sums() const {
    std::vector<double> s(tasks_, 0.0);
    for (std::size_t i = 0; i < agents_; ++i)
      for (std::size_t j = 0; j < tasks_; ++j) s[j] += (*this)(i, j);
    return s;
  }

  /// Continuous: rows non-negative and summing to 1 within tol. Discrete: one-hot rows.
  bool admissible(double tol = 1e-9) const {
    for (std::size_t i = 0; i < agents_; ++i) {
      double total = 0;
      std::size_t ones = 0;
      for (double v : row(i)) {
        if (!(v >= 0) || !std::isfinite(v)) return false;
        total += v;
        if (v == 1.0) ++ones;
        else if (mode_ == AllocationMode::Discrete && v != 0.0) return false;
      }
      if (mode_ == AllocationMode::Discrete ? ones != 1 : std::abs(total - 1.0) > tol) return false;
    }
    return true;
  }

  friend bool operator==(const AllocationMatrix&, const AllocationMatrix&) = default;

 private:
  std::size_t agents_ = 0;
  std::size_t tasks_ = 0;
  AllocationMode mode_ = AllocationMode::Continuous;
  std::vector<double> r_;
};

struct RewardStructure {
  AggregatorSpec outer;  // U over the M task scores
  AggregatorSpec inner;  // T over each column of N efforts
  std::size_t agents = 1;
  std::size_t tasks = 1;
};

inline void validate(const RewardStructure& s) {
  if (s.agents < 1 || s.tasks < 1) throw ConfigError("reward structure needs N >= 1 and M >= 1");
  validate(s.outer);
  validate(s.inner);
}

/// R(A) on a raw row-major N x M buffer; no admissibility check.
inline double reward_unchecked(const RewardStructure& s, std::span<const double> a) {
  thread_local std::vector<double> column, scores;
  column.resize(s.agents);
  scores.resize(s.tasks);
  for (std::size_t j = 0; j < s.tasks; ++j) {
    for (std::size_t i = 0; i < s.agents; ++i) column[i] = a[i * s.tasks + j];
    detail::SortedCopy sorted(column);
    scores[j] = detail::evaluate_sorted(s.inner, sorted.view());
  }
  detail::SortedCopy sorted(scores);
  return detail::evaluate_sorted(s.outer, sorted.view());
}

/// Task scores T(a_j) for every column.
inline std::vector<double> task_scores(const RewardStructure& s, const AllocationMatrix& a) {
  std::vector<double> scores(s.tasks);
  for (std::size_t j = 0; j < s.tasks; ++j) scores[j] = evaluate(s.inner, a.column(j));
  return scores;
}

inline double aggregate_reward(const RewardStructure& s, const AllocationMatrix& a) {
  validate(s);
  if (a.agents() != s.agents || a.tasks() != s.tasks)
    throw ConfigError("allocation is " + std::to_string(a.agents()) + "x" + std::to_string(a.tasks()) +
                      ", structure expects " + std::to_string(s.agents) + "x" + std::to_string(s.tasks));
  if (!a.admissible()) throw DomainError("allocation is not admissible");
  return evaluate(s.outer, task_scores(s, a));
}

/// dR/dr_ij by the chain rule through U and T (tie-splitting subgradients for min/max).
inline void reward_gradient(const RewardStructure& s, std::span<const double> a, std::span<double> grad) {
  std::vector<double> column(s.agents), scores(s.tasks);
  std::vector<std::vector<double>> inner_grads(s.tasks);
  for (std::size_t j = 0; j < s.tasks; ++j) {
    for (std::size_t i = 0; i < s.agents; ++i) column[i] = a[i * s.tasks + j];
    scores[j] = evaluate(s.inner, column);
    inner_grads[j] = gradient_input(s.inner, column);
  }
  const auto outer_grad = gradient_input(s.outer, scores);
  for (std::size_t i = 0; i < s.agents; ++i)
    for (std::size_t j = 0; j < s.tasks; ++j) grad[i * s.tasks + j] = outer_grad[j] * inner_grads[j][i];
}

}  // namespace hetgain
