#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "hetgain/gains.hpp"
#include "hetgain/hetgps.hpp"
#include "hetgain/oracle.hpp"

using namespace hetgain;

namespace {

// One-step batch holding the given allocations, with returns evaluated under theta.
Batch batch_of(const EnvTheta& theta, const std::vector<AllocationMatrix>& as) {
  Batch b;
  b.kind = PolicyKind::LogisticNormalSimplex;
  b.episodes = as.size();
  b.agents = as.front().agents();
  b.tasks = as.front().tasks();
  const auto s = theta.structure(b.agents, b.tasks);
  for (const auto& a : as) {
    b.allocations.insert(b.allocations.end(), a.data().begin(), a.data().end());
    b.returns.push_back(aggregate_reward(s, a));
    b.step_rewards.push_back(b.returns.back());
  }
  return b;
}

Batch constant_batch(double r, std::size_t episodes) {
  Batch b;
  b.episodes = episodes;
  b.agents = b.tasks = 2;
  b.returns.assign(episodes, r);
  b.step_rewards = b.returns;
  b.allocations.assign(episodes * 4, 0.5);
  return b;
}

// Gain of fixed batches re-evaluated under another theta.
double gain_at(const EnvTheta& theta, const Batch& het, const Batch& hom) {
  auto mean_reward = [&](const Batch& b) {
    const auto s = theta.structure(b.agents, b.tasks);
    double acc = 0;
    for (std::size_t e = 0; e < b.episodes; ++e) acc += aggregate_reward(s, b.allocation_matrix(e));
    return acc / static_cast<double>(b.episodes);
  };
  return mean_reward(het) - mean_reward(hom);
}

HetgpsConfig softmax_config(double t1, double t2, std::size_t iterations) {
  auto c = default_hetgps_config(EnvKind::MatrixContinuous, Family::SoftmaxAgg, t1, t2);
  c.iterations = iterations;
  return c;
}

}  // namespace

TEST(ComputeGain, Examples) {
  EXPECT_EQ(compute_gain(constant_batch(0.4, 8), constant_batch(0.4, 8)), 0.0);
  EXPECT_EQ(compute_gain(constant_batch(1.0, 8), constant_batch(0.0, 8)), 1.0);
}

TEST(ComputeGain, ThetaVersionMismatchIsRejected) {
  auto het = constant_batch(1.0, 4), hom = constant_batch(0.0, 4);
  hom.env_version = 1;
  EXPECT_THROW(compute_gain(het, hom), ConfigError);
  EXPECT_THROW(env_gradient_step(make_theta(Family::SoftmaxAgg, 0, 0), het, hom, 1.0, Direction::Maximize),
               ConfigError);
}

TEST(ComputeGain, SaturatedSoftmaxDiscreteGameIsAboutOne) {
  // tau_1 = 50, tau_2 = -50 approaches (U=min, T=max), where the optimal discrete gain is 1.
  const auto theta = make_theta(Family::SoftmaxAgg, 50, -50);
  const EnvDescriptor env{EnvKind::MatrixDiscrete, theta.structure(2, 2), {}};
  auto het = make_policy(env, Sharing::Heterogeneous, PolicyKind::CategoricalLogits, 1);
  auto hom = make_policy(env, Sharing::Homogeneous, PolicyKind::CategoricalLogits, 2);
  het.blocks[0] = {5, 0};
  het.blocks[1] = {0, 5};
  hom.blocks[0] = {5, 0};
  const auto bh = rollout(env, het, 16, false, 3);
  const auto bo = rollout(env, hom, 16, false, 3);
  EXPECT_NEAR(compute_gain(bh, bo), 1.0, 1e-9);
}

TEST(EnvGradientStep, IdenticalBatchesGiveZeroUpdate) {
  const auto theta = make_theta(Family::SoftmaxAgg, 0.7, -1.3);
  const auto b = batch_of(theta, {AllocationMatrix::from_rows({{0.2, 0.8}, {0.6, 0.4}}),
                                  AllocationMatrix::from_rows({{0.9, 0.1}, {0.5, 0.5}})});
  const auto step = env_gradient_step(theta, b, b, 100.0, Direction::Maximize);
  EXPECT_EQ(step.gradient[0], 0.0);
  EXPECT_EQ(step.gradient[1], 0.0);
  EXPECT_TRUE(step.theta == theta);
}

TEST(EnvGradientStep, MatchesFiniteDifferencesOfGain) {
  for (Family fam : {Family::SoftmaxAgg, Family::PowerSum}) {
    for (auto [t1, t2] : {std::pair{1.5, 0.8}, std::pair{3.0, 2.0}}) {
      const auto theta = make_theta(fam, fam == Family::SoftmaxAgg ? t1 - 2.5 : t1, fam == Family::SoftmaxAgg ? -t2 : t2);
      auto c = default_hetgps_config(EnvKind::MatrixContinuous, fam, theta.tau_inner, theta.tau_outer);
      const auto env = hetgps_env(c, theta);
      const auto het = make_policy(env, Sharing::Heterogeneous, PolicyKind::LogisticNormalSimplex, 4, 1.0);
      const auto hom = make_policy(env, Sharing::Homogeneous, PolicyKind::LogisticNormalSimplex, 5, 1.0);
      const auto bh = rollout(env, het, 64, true, 6), bo = rollout(env, hom, 64, true, 6);
      const auto g = env_gradient_step(theta, bh, bo, 1.0, Direction::Maximize).gradient;
      const double fd1 = oracle::finite_difference(
          [&](double t) { return gain_at(make_theta(fam, t, theta.tau_outer), bh, bo); }, theta.tau_inner);
      const double fd2 = oracle::finite_difference(
          [&](double t) { return gain_at(make_theta(fam, theta.tau_inner, t), bh, bo); }, theta.tau_outer);
      EXPECT_LE(std::abs(g[0] - fd1), 1e-5 * std::max(1.0, std::abs(fd1))) << to_string(fam);
      EXPECT_LE(std::abs(g[1] - fd2), 1e-5 * std::max(1.0, std::abs(fd2))) << to_string(fam);
      EXPECT_NEAR(compute_gain(bh, bo), gain_at(theta, bh, bo), 1e-12);
    }
  }
}

TEST(EnvGradientStep, OutwardGradientAtPowerSumClampLeavesThetaUnchanged) {
  const auto theta = make_theta(Family::PowerSum, 6, 0.3);
  const auto het = batch_of(theta, {AllocationMatrix::from_rows({{1, 0}, {0, 1}})});
  const auto hom = batch_of(theta, {AllocationMatrix::from_rows({{0.99, 0.01}, {0.99, 0.01}})});
  const auto step = env_gradient_step(theta, het, hom, 10.0, Direction::Maximize);
  ASSERT_GT(step.gradient[0], 0);
  ASSERT_LT(step.gradient[1], 0);
  EXPECT_TRUE(step.theta == theta);
}

TEST(EnvGradientStep, MinimizeFlipsTheSign) {
  const auto theta = make_theta(Family::SoftmaxAgg, 0.5, -0.5);
  const auto het = batch_of(theta, {AllocationMatrix::from_rows({{0.9, 0.1}, {0.2, 0.8}})});
  const auto hom = batch_of(theta, {AllocationMatrix::from_rows({{0.6, 0.4}, {0.6, 0.4}})});
  const auto up = env_gradient_step(theta, het, hom, 2.0, Direction::Maximize);
  const auto down = env_gradient_step(theta, het, hom, 2.0, Direction::Minimize);
  EXPECT_EQ(up.gradient, down.gradient);
  EXPECT_EQ(up.theta.tau_inner, theta.tau_inner + 2.0 * up.gradient[0]);
  EXPECT_EQ(down.theta.tau_inner, theta.tau_inner - 2.0 * up.gradient[0]);
  EXPECT_EQ(up.theta.tau_outer, theta.tau_outer + 2.0 * up.gradient[1]);
  EXPECT_EQ(down.theta.tau_outer, theta.tau_outer - 2.0 * up.gradient[1]);
}

TEST(Schedule, Regimes) {
  HetgpsConfig c;
  c.regime = Regime::Concurrent;
  c.env_every = 10;
  for (std::size_t i = 0; i < 40; ++i) {
    EXPECT_EQ(schedule(c, i).first, i % 10 == 9);
    EXPECT_TRUE(schedule(c, i).second);
  }
  c.regime = Regime::Alternated;
  std::size_t agents = 0, envs = 0;
  for (std::size_t i = 0; i < 110; ++i) {
    const auto [e, a] = schedule(c, i);
    EXPECT_NE(e, a);
    agents += a;
    envs += e;
    if (i < 50 || (i >= 55 && i < 105)) {
      EXPECT_TRUE(a) << i;
    }
  }
  EXPECT_EQ(agents, 100u);
  EXPECT_EQ(envs, 10u);
}

TEST(HetgpsConfig, Validation) {
  auto c = softmax_config(0, 0, 10);
  c.alpha = 0;
  EXPECT_THROW(run_hetgps_seed(c, 0), ConfigError);
  EXPECT_THROW(make_theta(Family::Mean, 0, 0), ConfigError);
  EXPECT_THROW(parse_regime("sometimes"), ConfigError);
  EXPECT_THROW(parse_direction("sideways"), ConfigError);
  EXPECT_THROW(run_hetgps(softmax_config(0, 0, 10), std::vector<std::uint64_t>{}), ConfigError);
}

TEST(RunHetgps, TraceReplaysThetaExactly) {
  for (auto regime : {Regime::Concurrent, Regime::Alternated}) {
    auto c = softmax_config(0, 0, 240);
    c.regime = regime;
    c.agent_iters = 20;
    c.env_iters = 4;
    const auto run = run_hetgps_seed(c, 11);
    ASSERT_EQ(run.rows.size(), c.iterations);
    EnvTheta theta = c.theta0;
    for (std::size_t i = 0; i < run.rows.size(); ++i) {
      const auto& r = run.rows[i];
      ASSERT_EQ(r.tau1, theta.tau_inner) << i;
      ASSERT_EQ(r.tau2, theta.tau_outer) << i;
      EXPECT_GE(r.tau1, theta.lower());
      EXPECT_LE(r.tau1, theta.upper());
      EXPECT_EQ(r.gain, r.return_het - r.return_hom);
      EXPECT_EQ(r.env_step, schedule(c, i).first);
      if (r.env_step) {
        theta.tau_inner += c.alpha * r.grad_tau1;
        theta.tau_outer += c.alpha * r.grad_tau2;
        theta.clamp();
      } else {
        EXPECT_EQ(r.grad_tau1, 0.0);
        EXPECT_EQ(r.grad_tau2, 0.0);
      }
    }
    EXPECT_TRUE(theta == run.final_theta);
  }
}

TEST(RunHetgps, DeterministicForSeed) {
  const auto c = softmax_config(0, 0, 120);
  std::ostringstream a, b;
  write_hetgps_csv(a, run_hetgps_seed(c, 4));
  write_hetgps_csv(b, run_hetgps_seed(c, 4));
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str().substr(0, a.str().find('\n')), "iter,tau1,tau2,gain,return_het,return_hom,grad_tau1,grad_tau2");
}

TEST(RunHetgps, SoftmaxFromZeroFindsConvexInnerConcaveOuter) {
  const auto c = softmax_config(0, 0, 600);
  for (std::uint64_t seed : {0, 1, 2}) {
    const auto run = run_hetgps_seed(c, seed);
    EXPECT_GT(run.final_theta.tau_inner, 0) << seed;
    EXPECT_LT(run.final_theta.tau_outer, 0) << seed;
    EXPECT_GT(run.final_gain, 0.3) << seed;
  }
}

TEST(RunHetgps, AdverseInitRecoversSigns) {
  const auto c = softmax_config(-5, 5, 600);
  for (std::uint64_t seed : {0, 1, 2}) {
    const auto run = run_hetgps_seed(c, seed);
    EXPECT_GT(run.final_theta.tau_inner, 0) << seed;
    EXPECT_LT(run.final_theta.tau_outer, 0) << seed;
  }
}

TEST(RunHetgps, PowerSumReachesConvexConcaveRidge) {
  // At tau_2 = 0.3 the optimal gain is flat for tau_1 >= 10/3, so that is all the search must find.
  auto c = default_hetgps_config(EnvKind::MatrixContinuous, Family::PowerSum, 1, 1);
  c.iterations = 600;
  for (std::uint64_t seed : {0, 1, 2}) {
    const auto run = run_hetgps_seed(c, seed);
    EXPECT_GE(run.final_theta.tau_inner, 10.0 / 3.0) << seed;
    EXPECT_EQ(run.final_theta.tau_outer, 0.3) << seed;
    EXPECT_GT(run.final_gain, 0.7) << seed;
  }
}

TEST(RunHetgps, MinimizeRemovesTheoreticalGain) {
  auto c = softmax_config(0, 0, 600);
  c.direction = Direction::Minimize;
  for (std::uint64_t seed : {0, 1}) {
    const auto run = run_hetgps_seed(c, seed);
    const auto theory = optimize_gain_continuous(run.final_theta.structure(2, 2));
    EXPECT_LE(*theory.delta_r_optimized, 1e-2) << seed << " at (" << run.final_theta.tau_inner << ", "
                                 << run.final_theta.tau_outer << ")";
    EXPECT_GE(run.final_gain, -0.05) << seed;
  }
}
