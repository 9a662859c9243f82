#pragma once

// Policy-gradient training of neurally homogeneous (shared parameters) and
// heterogeneous (per-agent parameters) teams, and the empirical gain between them.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hetgain/envs.hpp"
#include "hetgain/error.hpp"
#include "hetgain/nn.hpp"
#include "hetgain/reward.hpp"
#include "hetgain/simplex.hpp"

namespace hetgain {

enum class EnvKind { MatrixDiscrete, MatrixContinuous, Mgc };
enum class Sharing { Homogeneous, Heterogeneous };
enum class PolicyKind { CategoricalLogits, LogisticNormalSimplex, FeedforwardGaussian };

inline std::string_view to_string(EnvKind k) {
  switch (k) {
    case EnvKind::MatrixDiscrete: return "matrix-discrete";
    case EnvKind::MatrixContinuous: return "matrix-continuous";
    case EnvKind::Mgc: return "mgc";
  }
  return "?";
}

inline EnvKind parse_env_kind(std::string_view s) {
  if (s == "matrix-discrete") return EnvKind::MatrixDiscrete;
  if (s == "matrix-continuous") return EnvKind::MatrixContinuous;
  if (s == "mgc") return EnvKind::Mgc;
  throw ConfigError("unknown env '" + std::string(s) + "' (expected matrix-discrete, matrix-continuous or mgc)");
}

inline std::string_view to_string(Sharing s) { return s == Sharing::Homogeneous ? "homogeneous" : "heterogeneous"; }

inline std::string_view to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::CategoricalLogits: return "categorical-logits";
    case PolicyKind::LogisticNormalSimplex: return "logistic-normal";
    case PolicyKind::FeedforwardGaussian: return "feedforward-gaussian";
  }
  return "?";
}

struct EnvDescriptor {
  EnvKind kind = EnvKind::MatrixDiscrete;
  RewardStructure structure;
  MgcConfig mgc;

  std::size_t agents() const { return structure.agents; }
  std::size_t tasks() const { return structure.tasks; }
  std::size_t steps() const { return kind == EnvKind::Mgc ? mgc.horizon : 1; }
};

inline PolicyKind default_policy_kind(EnvKind k) {
  switch (k) {
    case EnvKind::MatrixDiscrete: return PolicyKind::CategoricalLogits;
    case EnvKind::MatrixContinuous: return PolicyKind::LogisticNormalSimplex;
    case EnvKind::Mgc: return PolicyKind::FeedforwardGaussian;
  }
  return PolicyKind::CategoricalLogits;
}

// ---------------------------------------------------------------------------
// policies

struct TeamPolicy {
  Sharing sharing = Sharing::Homogeneous;
  PolicyKind kind = PolicyKind::CategoricalLogits;
  std::size_t agents = 0;
  std::size_t tasks = 0;
  std::vector<std::vector<double>> blocks;  // logits, mean logits, or network weights
  std::vector<Adam> optimizers;
  Mlp net;
  double sigma = 0.3;         // exploration scale for the Gaussian kinds
  double action_scale = 1.0;  // network mean is action_scale * tanh(output)
  std::uint64_t version = 0;

  std::size_t block_of(std::size_t agent) const { return sharing == Sharing::Homogeneous ? 0 : agent; }
  std::size_t block_count() const { return blocks.size(); }
};

inline constexpr std::size_t kHiddenUnits = 64;
inline constexpr double kNetInitScale = 0.1;

/// init_noise adds N(0, init_noise^2) per-agent deviations to the initial logits, centered over
/// agents. A homogeneous team has one block, so its logits stay at zero (the agent average).
inline TeamPolicy make_policy(const EnvDescriptor& env, Sharing sharing, PolicyKind kind, std::uint64_t seed,
                              double init_noise = 0.0) {
  const bool ok = (kind == PolicyKind::CategoricalLogits && env.kind == EnvKind::MatrixDiscrete) ||
                  (kind == PolicyKind::LogisticNormalSimplex && env.kind == EnvKind::MatrixContinuous) ||
                  (kind == PolicyKind::FeedforwardGaussian && env.kind == EnvKind::Mgc);
  if (!ok)
    throw ConfigError("policy kind " + std::string(to_string(kind)) + " does not fit env " +
                      std::string(to_string(env.kind)));
  validate(env.structure);
  TeamPolicy p;
  p.sharing = sharing;
  p.kind = kind;
  p.agents = env.agents();
  p.tasks = env.tasks();
  const std::size_t count = sharing == Sharing::Homogeneous ? 1 : p.agents;
  if (kind == PolicyKind::FeedforwardGaussian) {
    p.net = Mlp(2 * p.tasks, kHiddenUnits, 2);
    p.action_scale = env.mgc.v_max;
  }
  for (std::size_t b = 0; b < count; ++b) {
    Rng rng(sub_seed(seed, b));
    std::vector<double> block;
    if (kind == PolicyKind::FeedforwardGaussian) {
      block = p.net.initial_parameters(rng, kNetInitScale);
    } else {
      block.assign(p.tasks, 0.0);
      if (init_noise > 0) {
        std::normal_distribution<double> g(0.0, init_noise);
        for (double& v : block) v = g(rng);
      }
    }
    p.blocks.push_back(std::move(block));
  }
  if (kind != PolicyKind::FeedforwardGaussian && init_noise > 0)
    for (std::size_t k = 0; k < p.tasks; ++k) {
      double mean = 0;
      for (const auto& b : p.blocks) mean += b[k];
      mean /= static_cast<double>(count);
      for (auto& b : p.blocks) b[k] -= mean;
    }
  for (const auto& b : p.blocks) p.optimizers.emplace_back(b.size());
  return p;
}

namespace detail {

inline void softmax_into(std::span<const double> logits, std::span<double> out) {
  const double top = *std::max_element(logits.begin(), logits.end());
  double z = 0;
  for (std::size_t k = 0; k < logits.size(); ++k) z += out[k] = std::exp(logits[k] - top);
  for (double& v : out) v /= z;
}

inline std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.size());
  softmax_into(logits, p);
  return p;
}

inline double categorical_entropy(std::span<const double> p) {
  double h = 0;
  for (double v : p)
    if (v > 0) h -= v * std::log(v);
  return h;
}

// lowest index among ties
inline std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

inline std::size_t sample_categorical(std::span<const double> p, Rng& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    acc += p[k];
    if (u < acc) return k;
  }
  return p.size() - 1;
}

}  // namespace detail

/// Per-agent entropy averaged over agents: categorical entropy for logits,
/// differential entropy of the Gaussian noise otherwise.
inline double policy_entropy(const TeamPolicy& p) {
  if (p.kind != PolicyKind::CategoricalLogits) {
    const double dims = p.kind == PolicyKind::FeedforwardGaussian ? 2.0 : static_cast<double>(p.tasks);
    return 0.5 * dims * std::log(2 * M_PI * M_E * p.sigma * p.sigma);
  }
  double h = 0;
  for (std::size_t i = 0; i < p.agents; ++i) h += detail::categorical_entropy(detail::softmax(p.blocks[p.block_of(i)]));
  return h / static_cast<double>(p.agents);
}

// ---------------------------------------------------------------------------
// rollouts

struct Batch {
  std::uint64_t policy_version = 0;
  std::uint64_t env_version = 0;  // theta version the batch was collected under
  bool stochastic = true;
  PolicyKind kind = PolicyKind::CategoricalLogits;
  std::size_t episodes = 0, steps = 1, agents = 0, tasks = 0, obs_size = 0;
  double sigma = 0;
  std::vector<double> returns;       // undiscounted sum over steps, per episode
  std::vector<double> step_rewards;  // episodes x steps
  std::vector<double> allocations;   // episodes x steps x agents x tasks
  std::vector<std::size_t> choices;  // categorical: episodes x agents
  std::vector<double> samples;       // logistic-normal logits z, or MGC velocities: per (episode, step, agent)
  std::vector<double> observations;  // MGC: episodes x steps x agents x obs_size

  std::span<const double> allocation(std::size_t e, std::size_t t = 0) const {
    return {allocations.data() + ((e * steps + t) * agents) * tasks, agents * tasks};
  }
  AllocationMatrix allocation_matrix(std::size_t e, std::size_t t = 0) const {
    AllocationMatrix a(agents, tasks,
                       kind == PolicyKind::CategoricalLogits ? AllocationMode::Discrete : AllocationMode::Continuous);
    const auto s = allocation(e, t);
    std::copy(s.begin(), s.end(), a.data().begin());
    return a;
  }
  /// Mean over episodes of the per-step average reward.
  double mean_step_reward() const {
    if (returns.empty()) return 0;
    return std::accumulate(returns.begin(), returns.end(), 0.0) / static_cast<double>(returns.size() * steps);
  }
};

namespace detail {

inline void rollout_matrix(const EnvDescriptor& env, const TeamPolicy& p, Batch& b, Rng& rng) {
  const std::size_t n = b.agents, m = b.tasks;
  std::vector<std::vector<double>> probs(p.block_count());
  for (std::size_t k = 0; k < p.block_count(); ++k) probs[k] = softmax(p.blocks[k]);
  std::normal_distribution<double> gauss(0.0, 1.0);
  b.allocations.assign(b.episodes * n * m, 0.0);
  if (p.kind == PolicyKind::CategoricalLogits) b.choices.resize(b.episodes * n);
  else if (b.stochastic) b.samples.resize(b.episodes * n * m);
  std::vector<double> z(m);
  for (std::size_t e = 0; e < b.episodes; ++e) {
    double* a = b.allocations.data() + e * n * m;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t blk = p.block_of(i);
      if (p.kind == PolicyKind::CategoricalLogits) {
        const std::size_t c = b.stochastic ? sample_categorical(probs[blk], rng) : argmax(p.blocks[blk]);
        b.choices[e * n + i] = c;
        a[i * m + c] = 1.0;
      } else if (b.stochastic) {
        for (std::size_t k = 0; k < m; ++k) z[k] = p.blocks[blk][k] + p.sigma * gauss(rng);
        std::copy(z.begin(), z.end(), b.samples.begin() + static_cast<std::ptrdiff_t>((e * n + i) * m));
        softmax_into(z, {a + i * m, m});
      } else {
        std::copy(probs[blk].begin(), probs[blk].end(), a + i * m);
      }
    }
    const double r = reward_unchecked(env.structure, {a, n * m});
    b.returns[e] = r;
    b.step_rewards[e] = r;
  }
}

inline void rollout_mgc(const EnvDescriptor& env, const TeamPolicy& p, Batch& b, std::uint64_t seed, Rng& rng) {
  const std::size_t n = b.agents, m = b.tasks, h = b.steps, os = b.obs_size;
  std::vector<MultiGoalCaptureEnv> envs(b.episodes, MultiGoalCaptureEnv(env.mgc, env.structure));
  for (std::size_t e = 0; e < b.episodes; ++e) envs[e].reset(sub_seed(seed, e));
  b.allocations.assign(b.episodes * h * n * m, 0.0);
  b.observations.assign(b.episodes * h * n * os, 0.0);
  b.samples.assign(b.episodes * h * n * 2, 0.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Vec2> vel(n);
  // agents of each block, evaluated as one matrix per step
  std::vector<std::vector<std::size_t>> members(p.block_count());
  for (std::size_t i = 0; i < n; ++i) members[p.block_of(i)].push_back(i);
  for (std::size_t t = 0; t < h; ++t) {
    for (std::size_t blk = 0; blk < p.block_count(); ++blk) {
      const auto& who = members[blk];
      Mlp::Matrix x(static_cast<Eigen::Index>(os), static_cast<Eigen::Index>(b.episodes * who.size()));
      for (std::size_t e = 0; e < b.episodes; ++e)
        for (std::size_t w = 0; w < who.size(); ++w) {
          const auto o = envs[e].observation(who[w]);
          double* dst = b.observations.data() + ((e * h + t) * n + who[w]) * os;
          for (std::size_t k = 0; k < os; ++k) x(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(e * who.size() + w)) = dst[k] = o[k];
        }
      const Mlp::Matrix mu = p.net.forward(p.blocks[blk], x);
      for (std::size_t e = 0; e < b.episodes; ++e)
        for (std::size_t w = 0; w < who.size(); ++w) {
          const auto col = static_cast<Eigen::Index>(e * who.size() + w);
          double* act = b.samples.data() + ((e * h + t) * n + who[w]) * 2;
          act[0] = p.action_scale * std::tanh(mu(0, col));
          act[1] = p.action_scale * std::tanh(mu(1, col));
        }
    }
    // noise drawn in (episode, agent) order so the stream does not depend on sharing
    for (std::size_t e = 0; e < b.episodes; ++e) {
      for (std::size_t i = 0; i < n; ++i) {
        double* act = b.samples.data() + ((e * h + t) * n + i) * 2;
        if (b.stochastic) {
          act[0] += p.sigma * gauss(rng);
          act[1] += p.sigma * gauss(rng);
        }
        vel[i] = {act[0], act[1]};
      }
      const auto step = mgc_step(envs[e], vel);
      std::copy(step.allocation.data().begin(), step.allocation.data().end(),
                b.allocations.begin() + static_cast<std::ptrdiff_t>((e * h + t) * n * m));
      b.step_rewards[e * h + t] = step.reward;
      b.returns[e] += step.reward;
    }
  }
}

}  // namespace detail

/// Plays batch_size episodes. stochastic = false uses the deterministic
/// evaluation mode and records no gradient data. Episodes share one RNG stream
/// derived from seed; MGC spawn e uses sub_seed(seed, e).
inline Batch rollout(const EnvDescriptor& env, const TeamPolicy& policy, std::size_t batch_size, bool stochastic,
                     std::uint64_t seed) {
  if (batch_size < 1) throw ConfigError("rollout: batch size must be >= 1");
  Batch b;
  b.policy_version = policy.version;
  b.stochastic = stochastic;
  b.kind = policy.kind;
  b.episodes = batch_size;
  b.steps = env.steps();
  b.agents = env.agents();
  b.tasks = env.tasks();
  b.obs_size = env.kind == EnvKind::Mgc ? 2 * env.tasks() : 0;
  b.sigma = policy.sigma;
  b.returns.assign(batch_size, 0.0);
  b.step_rewards.assign(batch_size * b.steps, 0.0);
  Rng rng(sub_seed(seed, 0x9e3779b97f4a7c15ULL));
  if (env.kind == EnvKind::Mgc) detail::rollout_mgc(env, policy, b, seed, rng);
  else detail::rollout_matrix(env, policy, b, rng);
  if (!stochastic) {
    b.samples.clear();
    b.observations.clear();
  }
  return b;
}

// ---------------------------------------------------------------------------
// REINFORCE

/// Score-function gradient per block: mean over episodes of
/// (return - batch mean) * sum over agents and steps of grad log pi.
/// MGC uses rewards-to-go with a per-step batch-mean baseline, scaled by 1/H.
inline std::vector<std::vector<double>> policy_gradient(const TeamPolicy& p, const Batch& b) {
  if (b.policy_version != p.version) throw ConfigError("stale batch: policy has been updated since the rollout");
  if (!b.stochastic) throw ConfigError("policy gradient needs a stochastic batch");
  std::vector<std::vector<double>> g(p.block_count());
  for (std::size_t k = 0; k < p.block_count(); ++k) g[k].assign(p.blocks[k].size(), 0.0);
  const std::size_t n = b.agents, m = b.tasks, eps = b.episodes;
  const double inv_b = 1.0 / static_cast<double>(eps);

  if (p.kind != PolicyKind::FeedforwardGaussian) {
    // offset by the first return so identical returns cancel exactly
    double offset = 0;
    for (double r : b.returns) offset += r - b.returns[0];
    const double baseline = b.returns[0] + offset * inv_b;
    std::vector<std::vector<double>> probs(p.block_count());
    for (std::size_t k = 0; k < p.block_count(); ++k) probs[k] = detail::softmax(p.blocks[k]);
    const double inv_var = 1.0 / (b.sigma * b.sigma);
    for (std::size_t e = 0; e < eps; ++e) {
      const double adv = (b.returns[e] - baseline) * inv_b;
      if (adv == 0) continue;
      for (std::size_t i = 0; i < n; ++i) {
        auto& gk = g[p.block_of(i)];
        if (p.kind == PolicyKind::CategoricalLogits) {
          const auto& pr = probs[p.block_of(i)];
          for (std::size_t k = 0; k < m; ++k) gk[k] -= adv * pr[k];
          gk[b.choices[e * n + i]] += adv;
        } else {
          const double* z = b.samples.data() + (e * n + i) * m;
          const auto& mu = p.blocks[p.block_of(i)];
          for (std::size_t k = 0; k < m; ++k) gk[k] += adv * (z[k] - mu[k]) * inv_var;
        }
      }
    }
    return g;
  }

  // rewards-to-go and their per-step batch means
  const std::size_t h = b.steps, os = b.obs_size;
  const double inv_h = 1.0 / static_cast<double>(h);
  std::vector<double> togo(eps * h), base(h, 0.0);
  for (std::size_t e = 0; e < eps; ++e) {
    double acc = 0;
    for (std::size_t t = h; t-- > 0;) {
      acc += b.step_rewards[e * h + t];
      togo[e * h + t] = acc * inv_h;
    }
  }
  for (std::size_t t = 0; t < h; ++t) {
    double offset = 0;
    for (std::size_t e = 0; e < eps; ++e) offset += togo[e * h + t] - togo[t];
    base[t] = togo[t] + offset * inv_b;
  }
  const double inv_var = 1.0 / (b.sigma * b.sigma);
  std::vector<std::vector<std::size_t>> members(p.block_count());
  for (std::size_t i = 0; i < n; ++i) members[p.block_of(i)].push_back(i);
  for (std::size_t blk = 0; blk < p.block_count(); ++blk) {
    const auto& who = members[blk];
    const auto cols = static_cast<Eigen::Index>(eps * h * who.size());
    Mlp::Matrix x(static_cast<Eigen::Index>(os), cols), dy(2, cols);
    Eigen::Index c = 0;
    for (std::size_t e = 0; e < eps; ++e)
      for (std::size_t t = 0; t < h; ++t)
        for (std::size_t i : who) {
          const double* o = b.observations.data() + ((e * h + t) * n + i) * os;
          for (std::size_t k = 0; k < os; ++k) x(static_cast<Eigen::Index>(k), c) = o[k];
          ++c;
        }
    Mlp::Cache cache;
    p.net.forward(p.blocks[blk], x, cache);
    c = 0;
    for (std::size_t e = 0; e < eps; ++e)
      for (std::size_t t = 0; t < h; ++t)
        for (std::size_t i : who) {
          const double adv = (togo[e * h + t] - base[t]) * inv_b;
          const double* a = b.samples.data() + ((e * h + t) * n + i) * 2;
          for (Eigen::Index d = 0; d < 2; ++d) {
            const double th = std::tanh(cache.y(d, c));
            const double mean = p.action_scale * th;
            dy(d, c) = adv * (a[d] - mean) * inv_var * p.action_scale * (1 - th * th);
          }
          ++c;
        }
    p.net.backward(p.blocks[blk], cache, dy, g[blk]);
  }
  return g;
}

struct UpdateStats {
  double grad_norm = 0;  // before clipping
  double entropy = 0;
};

inline constexpr double kGradientClip = 5.0;

/// One ascent step with Adam on the clipped score-function gradient plus the
/// entropy bonus (categorical policies only; the Gaussian kinds anneal sigma instead).
inline UpdateStats reinforce_update(TeamPolicy& p, const Batch& b, double lr, double entropy_coef = 0.0,
                                    double clip = kGradientClip) {
  auto g = policy_gradient(p, b);
  if (p.kind == PolicyKind::CategoricalLogits && entropy_coef > 0) {
    for (std::size_t i = 0; i < p.agents; ++i) {
      const std::size_t blk = p.block_of(i);
      const auto pr = detail::softmax(p.blocks[blk]);
      const double h = detail::categorical_entropy(pr);
      for (std::size_t k = 0; k < pr.size(); ++k)
        if (pr[k] > 0) g[blk][k] -= entropy_coef * pr[k] * (std::log(pr[k]) + h);
    }
  }
  double sq = 0;
  for (const auto& gk : g)
    for (double v : gk) sq += v * v;
  UpdateStats st;
  st.grad_norm = std::sqrt(sq);
  const double scale = st.grad_norm > clip ? clip / st.grad_norm : 1.0;
  for (std::size_t k = 0; k < p.block_count(); ++k) {
    if (scale != 1.0)
      for (double& v : g[k]) v *= scale;
    p.optimizers[k].ascend(p.blocks[k], g[k], lr);
  }
  ++p.version;
  st.entropy = policy_entropy(p);
  return st;
}

// ---------------------------------------------------------------------------
// training both teams

struct TrainOptions {
  std::size_t iterations = 300;
  std::size_t batch = 512;
  double lr = 0.05;
  double entropy_start = 0.01;
  double schedule_fraction = 0.6;  // entropy reaches 0 and sigma reaches sigma_end here
  double sigma_start = 0.3;
  double sigma_end = 0.05;
  std::size_t eval_every = 10;
  std::size_t eval_episodes = 1;
  double init_noise = 0.0;
};

inline TrainOptions default_train_options(EnvKind k) {
  TrainOptions o;
  if (k == EnvKind::Mgc) {
    o.iterations = 800;
    o.batch = 64;
    o.lr = 0.001;
    o.sigma_start = 0.2;
    o.sigma_end = 0.05;
    o.eval_episodes = 64;
  }
  return o;
}

inline double schedule_progress(const TrainOptions& o, std::size_t iter) {
  const double horizon = std::max(1.0, o.schedule_fraction * static_cast<double>(o.iterations));
  return std::min(1.0, static_cast<double>(iter) / horizon);
}
inline double entropy_coefficient(const TrainOptions& o, std::size_t iter) {
  return o.entropy_start * (1.0 - schedule_progress(o, iter));
}
inline double exploration_sigma(const TrainOptions& o, std::size_t iter) {
  const double p = schedule_progress(o, iter);
  return o.sigma_start * (1.0 - p) + o.sigma_end * p;
}

struct TrainRow {
  std::size_t iter = 0;
  std::uint64_t frames = 0;
  double return_het = 0, return_hom = 0, gain_stochastic = 0;
  std::optional<double> gain_deterministic;
  double entropy_het = 0, entropy_hom = 0;
};

struct TrainSeries {
  std::uint64_t seed = 0;
  std::vector<TrainRow> rows;
  double final_gain = 0;
  double final_return_het = 0, final_return_hom = 0;
};

struct TrainReport {
  std::vector<TrainSeries> runs;
  std::vector<std::uint64_t> seeds;
  double final_gain = 0;  // mean of the per-seed deterministic gains
};

/// Deterministic-evaluation returns of both teams on common spawns.
inline std::pair<double, double> deterministic_returns(const EnvDescriptor& env, const TeamPolicy& het,
                                                       const TeamPolicy& hom, std::size_t episodes,
                                                       std::uint64_t seed) {
  const std::size_t n = env.kind == EnvKind::Mgc ? episodes : 1;
  return {rollout(env, het, n, false, seed).mean_step_reward(), rollout(env, hom, n, false, seed).mean_step_reward()};
}

inline TrainSeries train_single(const EnvDescriptor& env, const TrainOptions& o, std::uint64_t seed) {
  if (o.iterations < 1) throw ConfigError("train: iterations must be >= 1");
  const PolicyKind kind = default_policy_kind(env.kind);
  TeamPolicy het = make_policy(env, Sharing::Heterogeneous, kind, sub_seed(seed, 1), o.init_noise);
  TeamPolicy hom = make_policy(env, Sharing::Homogeneous, kind, sub_seed(seed, 2), o.init_noise);
  const std::uint64_t eval_seed = sub_seed(seed, 3);
  TrainSeries s;
  s.seed = seed;
  std::uint64_t frames = 0;
  for (std::size_t it = 0; it < o.iterations; ++it) {
    het.sigma = hom.sigma = exploration_sigma(o, it);
    // common random numbers across teams
    const std::uint64_t rs = sub_seed(seed, 1000 + it);
    const Batch bh = rollout(env, het, o.batch, true, rs);
    const Batch bo = rollout(env, hom, o.batch, true, rs);
    frames += o.batch * env.steps();
    TrainRow row;
    row.iter = it;
    row.frames = frames;
    row.return_het = bh.mean_step_reward();
    row.return_hom = bo.mean_step_reward();
    row.gain_stochastic = row.return_het - row.return_hom;
    const double beta = entropy_coefficient(o, it);
    row.entropy_het = reinforce_update(het, bh, o.lr, beta).entropy;
    row.entropy_hom = reinforce_update(hom, bo, o.lr, beta).entropy;
    if ((it + 1) % o.eval_every == 0 || it + 1 == o.iterations) {
      const auto [rh, ro] = deterministic_returns(env, het, hom, o.eval_episodes, eval_seed);
      row.gain_deterministic = rh - ro;
      s.final_gain = rh - ro;
      s.final_return_het = rh;
      s.final_return_hom = ro;
    }
    s.rows.push_back(row);
  }
  return s;
}

inline TrainReport train_gain(const EnvDescriptor& env, const TrainOptions& o, std::span<const std::uint64_t> seeds) {
  if (seeds.empty()) throw ConfigError("train: at least one seed required");
  TrainReport r;
  r.seeds.assign(seeds.begin(), seeds.end());
  for (auto seed : seeds) r.runs.push_back(train_single(env, o, seed));
  for (const auto& s : r.runs) r.final_gain += s.final_gain;
  r.final_gain /= static_cast<double>(r.runs.size());
  return r;
}

inline void write_train_csv(std::ostream& os, const TrainSeries& s) {
  os << "iter,frames,return_het,return_hom,gain_stochastic,gain_deterministic,entropy_het,entropy_hom\n";
  char buf[256];
  for (const auto& r : s.rows) {
    char det[32] = "";
    if (r.gain_deterministic) std::snprintf(det, sizeof det, "%.9g", *r.gain_deterministic);
    std::snprintf(buf, sizeof buf, "%zu,%llu,%.9g,%.9g,%.9g,%s,%.9g,%.9g\n", r.iter,
                  static_cast<unsigned long long>(r.frames), r.return_het, r.return_hom, r.gain_stochastic, det,
                  r.entropy_het, r.entropy_hom);
    os << buf;
  }
}

/// Per-iteration mean and population std over seeds. Deterministic gains appear only on
/// evaluation iterations, so those cells stay blank elsewhere.
inline void write_train_aggregate_csv(std::ostream& os, const TrainReport& r) {
  os << "iter,seeds,return_het_mean,return_het_std,return_hom_mean,return_hom_std,gain_stochastic_mean,"
        "gain_stochastic_std,gain_deterministic_mean,gain_deterministic_std\n";
  if (r.runs.empty()) return;
  auto stats = [](const std::vector<double>& v) {
    double m = 0, q = 0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    for (double x : v) q += (x - m) * (x - m);
    return std::pair{m, std::sqrt(q / static_cast<double>(v.size()))};
  };
  char buf[512];
  for (std::size_t k = 0; k < r.runs.front().rows.size(); ++k) {
    std::vector<double> het, hom, gs, gd;
    for (const auto& run : r.runs) {
      const auto& row = run.rows.at(k);
      het.push_back(row.return_het);
      hom.push_back(row.return_hom);
      gs.push_back(row.gain_stochastic);
      if (row.gain_deterministic) gd.push_back(*row.gain_deterministic);
    }
    const auto [hm, hs] = stats(het);
    const auto [om, os_] = stats(hom);
    const auto [sm, ss] = stats(gs);
    char det[64] = ",";
    if (gd.size() == r.runs.size()) {
      const auto [dm, ds] = stats(gd);
      std::snprintf(det, sizeof det, "%.9g,%.9g", dm, ds);
    }
    std::snprintf(buf, sizeof buf, "%zu,%zu,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%s\n", r.runs.front().rows[k].iter,
                  r.runs.size(), hm, hs, om, os_, sm, ss, det);
    os << buf;
  }
}

}  // namespace hetgain
