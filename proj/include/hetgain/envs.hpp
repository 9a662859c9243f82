#pragma once

// One-step matrix games and a miniature multi-goal-capture task, both with a
// reward that may depend on learnable aggregator parameters theta.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hetgain/error.hpp"
#include "hetgain/reward.hpp"
#include "hetgain/simplex.hpp"

namespace hetgain {

// ---------------------------------------------------------------------------
// reward parameters

/// theta = (tau_1, tau_2): tau_1 parameterizes the inner aggregator T, tau_2 the outer U.
struct EnvTheta {
  Family family = Family::SoftmaxAgg;
  double tau_inner = 0.0;
  double tau_outer = 0.0;

  double lower() const { return family == Family::PowerSum ? 0.3 : -50.0; }
  double upper() const { return family == Family::PowerSum ? 6.0 : 50.0; }

  void clamp() {
    tau_inner = std::clamp(tau_inner, lower(), upper());
    tau_outer = std::clamp(tau_outer, lower(), upper());
  }

  RewardStructure structure(std::size_t agents, std::size_t tasks) const {
    return {{family, tau_outer}, {family, tau_inner}, agents, tasks};
  }

  friend bool operator==(const EnvTheta&, const EnvTheta&) = default;
};

inline EnvTheta make_theta(Family family, double tau_inner, double tau_outer) {
  if (family != Family::SoftmaxAgg && family != Family::PowerSum)
    throw ConfigError("reward parameters need the softmax or power-sum family");
  EnvTheta th{family, tau_inner, tau_outer};
  th.clamp();
  return th;
}

/// (dR/dtau_1, dR/dtau_2) at a fixed allocation.
inline std::array<double, 2> reward_theta_gradient(const EnvTheta& theta, const AllocationMatrix& a) {
  const auto s = theta.structure(a.agents(), a.tasks());
  std::vector<double> scores(a.tasks()), inner_dt(a.tasks());
  for (std::size_t j = 0; j < a.tasks(); ++j) {
    const auto col = a.column(j);
    scores[j] = evaluate(s.inner, col);
    inner_dt[j] = gradient_parameter(s.inner, col);
  }
  const auto du = gradient_input(s.outer, scores);
  double d_inner = 0;
  // A score that does not move with tau_1 contributes nothing, even where U' is infinite
  // (an all-zero column under a concave power sum).
  for (std::size_t j = 0; j < a.tasks(); ++j)
    if (inner_dt[j] != 0) d_inner += du[j] * inner_dt[j];
  return {d_inner, gradient_parameter(s.outer, scores)};
}

/// Zeroes components that would push a clamped parameter further out.
inline std::array<double, 2> project_theta_gradient(const EnvTheta& theta, std::array<double, 2> g) {
  const double tau[2] = {theta.tau_inner, theta.tau_outer};
  for (int k = 0; k < 2; ++k) {
    if (tau[k] >= theta.upper() && g[k] > 0) g[k] = 0;
    if (tau[k] <= theta.lower() && g[k] < 0) g[k] = 0;
  }
  return g;
}

// ---------------------------------------------------------------------------
// one-step matrix game

struct MatrixGameEnv {
  RewardStructure structure;
  AllocationMode mode = AllocationMode::Discrete;
};

struct MatrixStep {
  double reward = 0;
  AllocationMatrix allocation;
};

inline MatrixStep matrix_step(const MatrixGameEnv& env, std::span<const std::size_t> actions) {
  if (env.mode != AllocationMode::Discrete) throw ConfigError("continuous game expects simplex actions");
  if (actions.size() != env.structure.agents) throw ConfigError("matrix_step: one action per agent required");
  MatrixStep out;
  out.allocation = AllocationMatrix::from_assignment(actions, env.structure.tasks);
  out.reward = reward_unchecked(env.structure, out.allocation.data());
  return out;
}

inline MatrixStep matrix_step(const MatrixGameEnv& env, const std::vector<std::vector<double>>& actions) {
  if (env.mode != AllocationMode::Continuous) throw ConfigError("discrete game expects task indices");
  if (actions.size() != env.structure.agents) throw ConfigError("matrix_step: one action per agent required");
  MatrixStep out;
  out.allocation = AllocationMatrix(env.structure.agents, env.structure.tasks);
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (actions[i].size() != env.structure.tasks) throw ConfigError("matrix_step: action has the wrong length");
    double total = 0;
    for (double v : actions[i]) {
      if (!(v >= 0)) throw DomainError("matrix_step: negative effort in action");
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-6) throw DomainError("matrix_step: action does not sum to 1");
    std::copy(actions[i].begin(), actions[i].end(), out.allocation.row(i).begin());
  }
  out.reward = reward_unchecked(env.structure, out.allocation.data());
  return out;
}

// ---------------------------------------------------------------------------
// multi-goal capture

struct Vec2 {
  double x = 0, y = 0;
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct MgcConfig {
  std::size_t horizon = 50;
  double dt = 0.1;
  double v_max = 0.5;
  double goal_separation = 0.5;
  double arena = 1.0;  // half-width of the square arena
};

/// r_j = (1 - d_j / sum_k d_k) / (M - 1) for one agent's goal distances.
inline void efforts_from_distances(std::span<const double> d, std::span<double> r) {
  const std::size_t m = d.size();
  if (m < 2) throw DomainError("effort formula needs at least two goals");
  double total = 0;
  for (double v : d) total += v;
  if (!(total > 0)) throw DomainError("agent coincides with every goal");
  for (std::size_t j = 0; j < m; ++j) r[j] = (1.0 - d[j] / total) / static_cast<double>(m - 1);
}

inline AllocationMatrix mgc_efforts(std::span<const Vec2> agents, std::span<const Vec2> goals) {
  AllocationMatrix a(agents.size(), goals.size());
  std::vector<double> d(goals.size());
  for (std::size_t i = 0; i < agents.size(); ++i) {
    for (std::size_t j = 0; j < goals.size(); ++j) d[j] = distance(agents[i], goals[j]);
    efforts_from_distances(d, a.row(i));
  }
  return a;
}

struct MultiGoalCaptureEnv {
  MgcConfig config;
  RewardStructure structure;
  std::vector<Vec2> positions;
  std::vector<Vec2> goals;
  std::size_t t = 0;
  double last_reward = 0;

  MultiGoalCaptureEnv() = default;
  /// N and M come from the reward structure.
  MultiGoalCaptureEnv(MgcConfig c, RewardStructure s) : config(c), structure(s) {
    if (s.tasks < 2) throw ConfigError("multi-goal capture needs M >= 2");
    if (s.agents < 1 || c.horizon < 1) throw ConfigError("multi-goal capture needs N >= 1 and H >= 1");
  }

  /// Goals by rejection sampling with pairwise separation; agents uniform.
  void reset(std::uint64_t seed) {
    Rng rng(seed);
    const double w = config.arena;
    std::uniform_real_distribution<double> u(-w, w);
    goals.clear();
    while (goals.size() < structure.tasks) {
      const Vec2 g{u(rng), u(rng)};
      bool ok = true;
      for (const auto& h : goals) ok = ok && distance(g, h) >= config.goal_separation;
      if (ok) goals.push_back(g);
    }
    positions.resize(structure.agents);
    for (auto& p : positions) p = {u(rng), u(rng)};
    t = 0;
    last_reward = reward();
  }

  AllocationMatrix efforts() const { return mgc_efforts(positions, goals); }
  double reward() const { return reward_unchecked(structure, efforts().data()); }

  /// Goal displacements relative to agent i, (g_1 - p_i, ..., g_M - p_i).
  std::vector<double> observation(std::size_t i) const {
    std::vector<double> o;
    o.reserve(2 * goals.size());
    for (const auto& g : goals) {
      o.push_back(g.x - positions[i].x);
      o.push_back(g.y - positions[i].y);
    }
    return o;
  }
  std::size_t observation_size() const { return 2 * structure.tasks; }
};

struct MgcStep {
  std::vector<std::vector<double>> observations;
  AllocationMatrix allocation;
  double reward = 0;
  bool done = false;
};

/// velocities holds one (vx, vy) per agent; components are clamped to v_max.
inline MgcStep mgc_step(MultiGoalCaptureEnv& env, std::span<const Vec2> velocities) {
  if (velocities.size() != env.positions.size()) throw ConfigError("mgc_step: one velocity per agent required");
  if (env.t >= env.config.horizon) throw ConfigError("mgc_step: episode already finished");
  const double v = env.config.v_max, w = env.config.arena;
  for (std::size_t i = 0; i < velocities.size(); ++i) {
    auto& p = env.positions[i];
    p.x = std::clamp(p.x + std::clamp(velocities[i].x, -v, v) * env.config.dt, -w, w);
    p.y = std::clamp(p.y + std::clamp(velocities[i].y, -v, v) * env.config.dt, -w, w);
  }
  ++env.t;
  MgcStep out;
  out.allocation = env.efforts();
  out.reward = reward_unchecked(env.structure, out.allocation.data());
  env.last_reward = out.reward;
  out.done = env.t >= env.config.horizon;
  for (std::size_t i = 0; i < env.positions.size(); ++i) out.observations.push_back(env.observation(i));
  return out;
}

/// Trace rows (t, agent, x, y, r_i1..r_iM, reward), header included.
inline void write_trace_header(std::ostream& os, std::size_t tasks) {
  os << "t,agent,x,y";
  for (std::size_t j = 0; j < tasks; ++j) os << ",r_" << j + 1;
  os << ",reward\n";
}

inline void write_trace_rows(std::ostream& os, const MultiGoalCaptureEnv& env, const AllocationMatrix& a,
                             double reward) {
  char buf[64];
  for (std::size_t i = 0; i < env.positions.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%zu,%.9g,%.9g", env.t, i, env.positions[i].x, env.positions[i].y);
    os << buf;
    for (double r : a.row(i)) {
      std::snprintf(buf, sizeof buf, ",%.9g", r);
      os << buf;
    }
    std::snprintf(buf, sizeof buf, ",%.9g\n", reward);
    os << buf;
  }
}

}  // namespace hetgain
