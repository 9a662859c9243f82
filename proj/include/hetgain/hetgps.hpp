#pragma once

// Heterogeneity gain parameter search: gradient ascent (or descent) on the
// reward parameters theta against the measured gain of two learning teams.

#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "hetgain/envs.hpp"
#include "hetgain/error.hpp"
#include "hetgain/learn.hpp"

namespace hetgain {

enum class Regime { Concurrent, Alternated };
enum class Direction { Maximize, Minimize };

inline std::string_view to_string(Regime r) { return r == Regime::Concurrent ? "concurrent" : "alternated"; }
inline std::string_view to_string(Direction d) { return d == Direction::Maximize ? "maximize" : "minimize"; }

inline Regime parse_regime(std::string_view s) {
  if (s == "concurrent") return Regime::Concurrent;
  if (s == "alternated") return Regime::Alternated;
  throw ConfigError("unknown regime '" + std::string(s) + "' (expected concurrent or alternated)");
}

inline Direction parse_direction(std::string_view s) {
  if (s == "maximize" || s == "max") return Direction::Maximize;
  if (s == "minimize" || s == "min") return Direction::Minimize;
  throw ConfigError("unknown direction '" + std::string(s) + "' (expected maximize or minimize)");
}

// The gain gradient in theta is O(1e-2) on the matrix games, so theta only crosses the clamp
// range within the default budget at these rates.
inline double default_alpha(Family f) { return f == Family::PowerSum ? 10.0 : 100.0; }

struct HetgpsConfig {
  EnvKind env = EnvKind::MatrixContinuous;
  std::size_t agents = 2;
  std::size_t tasks = 2;
  MgcConfig mgc;
  EnvTheta theta0;
  double alpha = 100.0;
  Regime regime = Regime::Concurrent;
  std::size_t env_every = 1;      // concurrent: environment step on every x-th iteration
  std::size_t agent_iters = 50;   // alternated: agent iterations per cycle
  std::size_t env_iters = 5;      // alternated: environment iterations per cycle
  std::size_t iterations = 1500;
  Direction direction = Direction::Maximize;
  TrainOptions train;
};

inline HetgpsConfig default_hetgps_config(EnvKind env, Family family, double tau_inner, double tau_outer) {
  HetgpsConfig c;
  c.env = env;
  c.theta0 = make_theta(family, tau_inner, tau_outer);
  c.alpha = default_alpha(family);
  c.train = default_train_options(env);
  // Centered per-agent logit noise; at theta = (0, 0) the reward is flat and zero logits never leave the saddle.
  if (env != EnvKind::Mgc) c.train.init_noise = 2.0;
  return c;
}

inline void validate(const HetgpsConfig& c) {
  if (!(c.alpha > 0)) throw ConfigError("hetgps: alpha must be > 0");
  if (c.iterations < 1) throw ConfigError("hetgps: iterations must be >= 1");
  if (c.regime == Regime::Concurrent && c.env_every < 1) throw ConfigError("hetgps: env_every must be >= 1");
  if (c.regime == Regime::Alternated && c.agent_iters + c.env_iters < 1)
    throw ConfigError("hetgps: an alternated cycle needs at least one iteration");
  make_theta(c.theta0.family, c.theta0.tau_inner, c.theta0.tau_outer);
}

/// Whether the environment and the agents train at iteration i (0-based).
inline std::pair<bool, bool> schedule(const HetgpsConfig& c, std::size_t i) {
  if (c.regime == Regime::Concurrent) return {(i + 1) % c.env_every == 0, true};
  const std::size_t pos = i % (c.agent_iters + c.env_iters);
  const bool agents = pos < c.agent_iters;
  return {!agents, agents};
}

inline EnvDescriptor hetgps_env(const HetgpsConfig& c, const EnvTheta& theta) {
  return {c.env, theta.structure(c.agents, c.tasks), c.mgc};
}

/// Mean per-step return of the het batch minus that of the hom batch.
inline double compute_gain(const Batch& het, const Batch& hom) {
  if (het.env_version != hom.env_version) throw ConfigError("compute_gain: batches were collected under different theta");
  return het.mean_step_reward() - hom.mean_step_reward();
}

/// Batch mean of dR/dtheta, averaged over steps.
inline std::array<double, 2> batch_theta_gradient(const EnvTheta& theta, const Batch& b) {
  std::array<double, 2> g{0, 0};
  for (std::size_t e = 0; e < b.episodes; ++e)
    for (std::size_t t = 0; t < b.steps; ++t) {
      const auto d = reward_theta_gradient(theta, b.allocation_matrix(e, t));
      g[0] += d[0];
      g[1] += d[1];
    }
  const double scale = 1.0 / static_cast<double>(b.episodes * b.steps);
  return {g[0] * scale, g[1] * scale};
}

struct EnvStep {
  EnvTheta theta;
  std::array<double, 2> gradient{0, 0};  // of the gain, before the direction sign
};

/// theta +/- alpha * grad(gain), clamped to the family bounds.
inline EnvStep env_gradient_step(const EnvTheta& theta, const Batch& het, const Batch& hom, double alpha,
                                 Direction direction) {
  if (het.env_version != hom.env_version) throw ConfigError("env_gradient_step: batches were collected under different theta");
  const auto gh = batch_theta_gradient(theta, het);
  const auto go = batch_theta_gradient(theta, hom);
  EnvStep s;
  s.gradient = {gh[0] - go[0], gh[1] - go[1]};
  const double sign = direction == Direction::Maximize ? 1.0 : -1.0;
  s.theta = theta;
  s.theta.tau_inner += sign * alpha * s.gradient[0];
  s.theta.tau_outer += sign * alpha * s.gradient[1];
  s.theta.clamp();
  return s;
}

struct HetgpsRow {
  std::size_t iter = 0;
  double tau1 = 0, tau2 = 0;  // theta the batches were collected under
  double gain = 0, return_het = 0, return_hom = 0;
  double grad_tau1 = 0, grad_tau2 = 0;  // zero when the environment did not step
  bool env_step = false;
};

struct HetgpsRun {
  std::uint64_t seed = 0;
  std::vector<HetgpsRow> rows;
  EnvTheta final_theta;
  double final_gain = 0;  // deterministic evaluation at final_theta
};

struct HetgpsReport {
  HetgpsConfig config;
  std::vector<HetgpsRun> runs;
};

inline HetgpsRun run_hetgps_seed(const HetgpsConfig& c, std::uint64_t seed) {
  validate(c);
  EnvTheta theta = c.theta0;
  const PolicyKind kind = default_policy_kind(c.env);
  const auto env0 = hetgps_env(c, theta);
  TeamPolicy het = make_policy(env0, Sharing::Heterogeneous, kind, sub_seed(seed, 1), c.train.init_noise);
  TeamPolicy hom = make_policy(env0, Sharing::Homogeneous, kind, sub_seed(seed, 2), c.train.init_noise);
  TrainOptions sched = c.train;
  sched.iterations = c.iterations;
  HetgpsRun run;
  run.seed = seed;
  std::uint64_t env_version = 0;
  for (std::size_t i = 0; i < c.iterations; ++i) {
    const auto env = hetgps_env(c, theta);
    het.sigma = hom.sigma = exploration_sigma(sched, i);
    const std::uint64_t rs = sub_seed(seed, 1000 + i);
    Batch bh = rollout(env, het, c.train.batch, true, rs);
    Batch bo = rollout(env, hom, c.train.batch, true, rs);
    bh.env_version = bo.env_version = env_version;
    HetgpsRow row;
    row.iter = i;
    row.tau1 = theta.tau_inner;
    row.tau2 = theta.tau_outer;
    row.return_het = bh.mean_step_reward();
    row.return_hom = bo.mean_step_reward();
    row.gain = compute_gain(bh, bo);
    const auto [train_env, train_agents] = schedule(c, i);
    if (train_env) {
      const auto step = env_gradient_step(theta, bh, bo, c.alpha, c.direction);
      row.grad_tau1 = step.gradient[0];
      row.grad_tau2 = step.gradient[1];
      row.env_step = true;
      if (!(step.theta == theta)) ++env_version;
      theta = step.theta;
    }
    if (train_agents) {
      const double beta = entropy_coefficient(sched, i);
      reinforce_update(het, bh, c.train.lr, beta);
      reinforce_update(hom, bo, c.train.lr, beta);
    }
    run.rows.push_back(row);
  }
  run.final_theta = theta;
  const auto [rh, ro] = deterministic_returns(hetgps_env(c, theta), het, hom, c.train.eval_episodes, sub_seed(seed, 3));
  run.final_gain = rh - ro;
  return run;
}

inline HetgpsReport run_hetgps(const HetgpsConfig& c, std::span<const std::uint64_t> seeds) {
  if (seeds.empty()) throw ConfigError("hetgps: at least one seed required");
  HetgpsReport r;
  r.config = c;
  for (auto s : seeds) r.runs.push_back(run_hetgps_seed(c, s));
  return r;
}

inline void write_hetgps_csv(std::ostream& os, const HetgpsRun& run) {
  os << "iter,tau1,tau2,gain,return_het,return_hom,grad_tau1,grad_tau2\n";
  char buf[256];
  for (const auto& r : run.rows) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.9g,%.9g,%.9g,%.17g,%.17g\n", r.iter, r.tau1, r.tau2, r.gain,
                  r.return_het, r.return_hom, r.grad_tau1, r.grad_tau2);
    os << buf;
  }
}

}  // namespace hetgain
