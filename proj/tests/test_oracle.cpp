#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "hetgain/gains.hpp"
#include "hetgain/oracle.hpp"

using namespace hetgain;

namespace {

RewardStructure make(Family u, Family t, std::size_t n, std::size_t m) { return {{u, 0}, {t, 0}, n, m}; }

}  // namespace

TEST(GridGain, Examples) {
  EXPECT_NEAR(*oracle::grid_gain(make(Family::Min, Family::Max, 2, 2), {0.01, 2, 2}).delta_r_optimized, 0.5, 0.01);
  EXPECT_EQ(*oracle::grid_gain(make(Family::Max, Family::Mean, 2, 2), {0.02, 2, 2}).delta_r_optimized, 0.0);
  EXPECT_EQ(*oracle::grid_gain({AggregatorSpec::softmax(2), AggregatorSpec::power_sum(3), 1, 3}, {0.05, 1, 3})
                 .delta_r_optimized,
            0.0);
}

TEST(GridGain, LatticeCounts) {
  EXPECT_EQ(oracle::lattice_size(2, 50), 51.0);
  EXPECT_EQ(oracle::lattice_size(3, 50), 1326.0);
  const auto r = oracle::grid_gain(make(Family::Mean, Family::Mean, 2, 3), {0.25, 2, 3});
  EXPECT_EQ(r.iterations, 15u + 15u * 15u);
}

TEST(GridGain, Guards) {
  EXPECT_THROW(oracle::grid_gain(make(Family::Min, Family::Max, 3, 3), {0.02, 3, 3}), SizeGuardError);
  EXPECT_THROW(oracle::grid_gain(make(Family::Min, Family::Max, 2, 2), {0.03, 2, 2}), ConfigError);
  EXPECT_THROW(oracle::grid_gain(make(Family::Min, Family::Max, 2, 2), {0.1, 2, 3}), ConfigError);
}

TEST(GridGain, ArgmaxesReproduceValues) {
  const RewardStructure s{AggregatorSpec::softmax(-1), AggregatorSpec::softmax(3), 2, 2};
  const auto r = oracle::grid_gain(s, {0.05, 2, 2});
  EXPECT_EQ(aggregate_reward(s, r.het_argmax), r.r_het);
  EXPECT_EQ(aggregate_reward(s, AllocationMatrix::homogeneous(r.hom_argmax, 2)), r.r_hom);
}

TEST(Exhaustive, Examples) {
  EXPECT_EQ(*oracle::exhaustive_discrete_gain(make(Family::Min, Family::Mean, 2, 2)).delta_r_bruteforce, 0.5);
  EXPECT_EQ(*oracle::exhaustive_discrete_gain(make(Family::Mean, Family::Min, 3, 2)).delta_r_bruteforce, 0.0);
  EXPECT_EQ(*oracle::exhaustive_discrete_gain(make(Family::Min, Family::Max, 2, 3)).delta_r_bruteforce, 0.0);
}

TEST(Exhaustive, EqualsCompositionEnumeration) {
  const std::vector<AggregatorSpec> specs{AggregatorSpec::min(),          AggregatorSpec::mean(),
                                          AggregatorSpec::max(),          AggregatorSpec::power_sum(2),
                                          AggregatorSpec::softmax(-1.5),  AggregatorSpec::lse(2)};
  const std::pair<std::size_t, std::size_t> sizes[] = {{2, 2}, {3, 2}, {2, 3}, {4, 3}, {5, 2}, {4, 4}};
  for (const auto& u : specs)
    for (const auto& t : specs)
      for (auto [n, m] : sizes) {
        const RewardStructure s{u, t, n, m};
        const auto fast = brute_force_gain_discrete(s);
        const auto slow = oracle::exhaustive_discrete_gain(s);
        EXPECT_EQ(*fast.delta_r_bruteforce, *slow.delta_r_bruteforce) << describe(u) << " " << describe(t);
        EXPECT_EQ(fast.r_het, slow.r_het);
        EXPECT_EQ(fast.r_hom, slow.r_hom);
      }
}

TEST(Exhaustive, Guard) {
  EXPECT_THROW(oracle::exhaustive_discrete_gain(make(Family::Min, Family::Max, 21, 2)), SizeGuardError);
}

TEST(FiniteDifference, Examples) {
  EXPECT_NEAR(oracle::finite_difference([](double x) { return x * x; }, 3.0, 1e-5), 6.0, 1e-8);
  const auto g = oracle::finite_difference([](std::span<const double>) { return 4.2; }, std::vector<double>{1, 2, 3});
  EXPECT_EQ(g, (std::vector<double>{0, 0, 0}));
}

TEST(FiniteDifference, MatchesParameterGradient) {
  Rng rng(4);
  std::uniform_real_distribution<double> u(0.05, 0.95), tu(-3, 3);
  for (int probe = 0; probe < 100; ++probe) {
    std::vector<double> x{u(rng), u(rng), u(rng)};
    const AggregatorSpec s = AggregatorSpec::softmax(tu(rng));
    const double fd = oracle::finite_difference([&](double t) { return evaluate({s.family, t}, x); }, s.t);
    EXPECT_LE(std::abs(gradient_parameter(s, x) - fd), 1e-5 * std::max(1.0, std::abs(fd)));
  }
}
