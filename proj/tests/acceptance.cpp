// Acceptance run: one PASS/FAIL line per criterion, at the stated tolerances.
//
//   acceptance            run every criterion
//   acceptance 1 8 11     run a subset
//
// Exit status is non-zero when any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "hetgain/curvature.hpp"
#include "hetgain/gains.hpp"
#include "hetgain/hetgps.hpp"
#include "hetgain/learn.hpp"
#include "hetgain/oracle.hpp"

using namespace hetgain;

namespace {

constexpr Family kExtremes[] = {Family::Min, Family::Mean, Family::Max};

std::string format(const char* fmt, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, ap);
  va_end(ap);
  return buf;
}

std::string name(Family u, Family t) { return "(" + std::string(to_string(u)) + "," + std::string(to_string(t)) + ")"; }

/// Collects failures; the first few are kept for the report line.
struct Check {
  std::size_t checks = 0, failures = 0;
  std::vector<std::string> notes;
  void expect(bool ok, const std::string& what) {
    ++checks;
    if (ok) return;
    ++failures;
    if (notes.size() < 6) notes.push_back(what);
  }
  void note(const std::string& s) { notes.push_back(s); }
};

struct Criterion {
  int id;
  const char* title;
  double budget_s;
  std::function<void(Check&)> body;
};

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

std::vector<std::uint64_t> seeds(std::uint64_t n) {
  std::vector<std::uint64_t> s(n);
  for (std::uint64_t k = 0; k < n; ++k) s[k] = k;
  return s;
}

// ---------------------------------------------------------------------------

void closed_form_tables(Check& c) {
  const std::pair<std::size_t, std::size_t> sizes[] = {{2, 2}, {4, 4}, {3, 2}, {2, 3}, {11, 2}};
  double worst = 0;
  for (auto [n, m] : sizes)
    for (Family u : kExtremes)
      for (Family t : kExtremes) {
        const RewardStructure s{{u, 0}, {t, 0}, n, m};
        const double brute = *brute_force_gain_discrete(s).delta_r_bruteforce;
        const double want_d = closed_form_gain(u, t, AllocationMode::Discrete, n, m);
        c.expect(brute == want_d, format("discrete %s N=%zu M=%zu: %.17g vs %.17g", name(u, t).c_str(), n, m, brute, want_d));

        const double opt = *optimize_gain_continuous(s).delta_r_optimized;
        const double want_c = closed_form_gain(u, t, AllocationMode::Continuous, n, m);
        c.expect(std::abs(opt - want_c) <= 5e-3,
                 format("continuous %s N=%zu M=%zu: optimizer %.6f vs formula %.6f", name(u, t).c_str(), n, m, opt, want_c));
        worst = std::max(worst, std::abs(opt - want_c));
        if (n <= 3 && m <= 3) {
          // a lattice for M = 3 has to contain 1/3
          const double res = m == 3 ? 1.0 / 60 : 0.02;
          const double grid = *oracle::grid_gain(s, {res, n, m}).delta_r_optimized;
          c.expect(std::abs(opt - grid) <= 5e-3, format("continuous %s N=%zu M=%zu: optimizer %.6f vs grid %.6f",
                                                        name(u, t).c_str(), n, m, opt, grid));
          worst = std::max(worst, std::abs(opt - grid));
          if (m == 3) {
            const double coarse = *oracle::grid_gain(s, {0.02, n, m}).delta_r_optimized;
            if (std::abs(opt - coarse) > 5e-3)
              c.note(format("grid 0.02 at %s N=%zu M=%zu gives %.4f (lattice misses 1/3)", name(u, t).c_str(), n, m, coarse));
          }
        }
      }
  c.note(format("worst continuous deviation %.2e", worst));
}

void train_table(Check& c, EnvKind kind, std::size_t n, const std::vector<std::tuple<Family, Family, double, double>>& want) {
  const auto o = default_train_options(kind);
  const auto ss = seeds(9);
  for (auto [u, t, lo, hi] : want) {
    const auto r = train_gain({kind, {{u, 0}, {t, 0}, n, n}, {}}, o, ss);
    std::vector<double> g;
    for (const auto& run : r.runs) g.push_back(run.final_gain);
    const double m = mean_of(g);
    c.expect(m >= lo && m <= hi, format("%s gain %.4f +- %.4f outside [%.3f, %.3f]", name(u, t).c_str(), m, std_of(g), lo, hi));
    c.note(format("%s %.3f+-%.3f", name(u, t).c_str(), m, std_of(g)));
  }
}

std::vector<std::tuple<Family, Family, double, double>> all_pairs_around(
    const std::vector<std::tuple<Family, Family, double>>& positive, double tol) {
  std::vector<std::tuple<Family, Family, double, double>> out;
  for (Family u : kExtremes)
    for (Family t : kExtremes) {
      double v = 0;
      for (auto [pu, pt, pv] : positive)
        if (pu == u && pt == t) v = pv;
      out.emplace_back(u, t, v - tol, v + tol);
    }
  return out;
}

void softmax_bound_suite(Check& c) {
  for (double t : {0.5, 1.0, 2.0, 4.0})
    for (double tau : {-4.0, -1.0, 0.0, 1.0, 4.0}) {
      const RewardStructure s{AggregatorSpec::softmax(tau), AggregatorSpec::softmax(t), 2, 2};
      const double grid = *oracle::grid_gain(s, {0.01, 2, 2}).delta_r_optimized;
      const double bound = softmax_gain_bound(t, tau, 2).bound;
      c.expect(grid >= bound - 1e-3, format("t=%g tau=%g: grid %.6f < bound %.6f", t, tau, grid, bound));
    }
  for (double t : {-4.0, -2.0, -0.5, 0.0})
    for (double tau : {-4.0, -1.0, 0.0, 1.0, 4.0}) {
      const RewardStructure s{AggregatorSpec::softmax(tau), AggregatorSpec::softmax(t), 2, 2};
      const double grid = *oracle::grid_gain(s, {0.01, 2, 2}).delta_r_optimized;
      c.expect(grid <= 1e-3, format("t=%g tau=%g: grid gain %.6f > 1e-3", t, tau, grid));
    }
}

void curvature_suite(Check& c) {
  std::vector<AggregatorSpec> specs{AggregatorSpec::min(), AggregatorSpec::mean(), AggregatorSpec::max()};
  for (double t : {-5.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 5.0}) {
    if (t > 0) specs.push_back(AggregatorSpec::power_sum(t));
    if (t != 0) specs.push_back(AggregatorSpec::power_mean(t));
    if (t != 0) specs.push_back(AggregatorSpec::lse(t));
    specs.push_back(AggregatorSpec::softmax(t));
  }
  for (const auto& spec : specs)
    for (std::size_t dim : {2u, 3u, 5u}) {
      const auto analytic = classify_analytic(spec).classification;
      const auto v = classify_empirical(spec, dim, 2000, 2024);
      std::string extra;
      if (v.convexity_counterexample && analytic == Curvature::SchurConvex) {
        const auto& p = *v.convexity_counterexample;
        extra = format(" f(x)-f(y)=%.2e", evaluate(spec, p.x) - evaluate(spec, p.y));
      }
      if (v.concavity_counterexample && analytic == Curvature::SchurConcave) {
        const auto& p = *v.concavity_counterexample;
        extra = format(" f(x)-f(y)=%.2e", evaluate(spec, p.x) - evaluate(spec, p.y));
      }
      c.expect(v.classification == analytic,
               format("%s dim=%zu: empirical %s, analytic %s%s", describe(spec).c_str(), dim,
                      std::string(to_string(v.classification)).c_str(), std::string(to_string(analytic)).c_str(),
                      extra.c_str()));
    }
}

void theorem_properties(Check& c) {
  for (double t : {1.5, 2.0, 3.0})
    for (std::size_t n : {2u, 3u})
      for (std::size_t m : {2u, 3u}) {
        const auto r = optimize_gain_continuous({AggregatorSpec::mean(), AggregatorSpec::power_sum(t), n, m});
        c.expect(r.r_het + 1e-9 >= r.r_hom, "containment");
        if (!r.hom_trivial)
          c.expect(*r.delta_r_optimized > 1e-4, format("convex inner t=%g N=%zu M=%zu: gain %.2e", t, n, m, *r.delta_r_optimized));
      }
  const std::vector<AggregatorSpec> concave{AggregatorSpec::min(), AggregatorSpec::mean(), AggregatorSpec::power_sum(0.3),
                                            AggregatorSpec::power_sum(0.5), AggregatorSpec::power_sum(0.8)};
  for (const auto& inner : concave)
    for (Family u : kExtremes)
      for (std::size_t n : {2u, 3u})
        for (std::size_t m : {2u, 3u}) {
          const auto r = optimize_gain_continuous({{u, 0}, inner, n, m});
          c.expect(r.r_het + 1e-9 >= r.r_hom, "containment");
          c.expect(*r.delta_r_optimized <= 1e-3, format("concave inner %s U=%s N=%zu M=%zu: gain %.2e", describe(inner).c_str(),
                                                        std::string(to_string(u)).c_str(), n, m, *r.delta_r_optimized));
        }
  for (std::size_t n : {2u, 3u})
    for (std::size_t m : {2u, 3u}) {
      c.expect(verify_constant_sum(AggregatorSpec::mean(), n, m, 500, 1).constant, "mean scores are constant-sum");
      const RewardStructure s{AggregatorSpec::power_sum(2), AggregatorSpec::mean(), n, m};
      const auto r = optimize_gain_continuous(s);
      c.expect(*r.delta_r_optimized <= 1e-3, format("constant-sum N=%zu M=%zu: gain %.2e", n, m, *r.delta_r_optimized));
      const double trivial = aggregate_reward(s, AllocationMatrix::homogeneous(one_hot(m, 0), n));
      c.expect(std::abs(trivial - r.r_het) <= 1e-6, format("trivial allocation %.6f vs r_het %.6f", trivial, r.r_het));
    }
}

void hetgps_suite(Check& c) {
  const auto ss = seeds(5);
  auto run = [&](Family f, double t1, double t2) {
    const auto cfg = default_hetgps_config(EnvKind::MatrixContinuous, f, t1, t2);
    return run_hetgps(cfg, ss).runs;
  };
  std::string line = "softmax(0,0):";
  for (const auto& r : run(Family::SoftmaxAgg, 0, 0)) {
    const auto& th = r.final_theta;
    c.expect(th.tau_inner > 1 && th.tau_outer < -1 && r.final_gain > 0.3,
             format("softmax seed %llu ends at (%.3f, %.3f) gain %.3f", static_cast<unsigned long long>(r.seed), th.tau_inner,
                    th.tau_outer, r.final_gain));
    line += format(" (%.2f,%.2f|%.2f)", th.tau_inner, th.tau_outer, r.final_gain);
  }
  c.note(line);
  line = "power-sum(1,1):";
  for (const auto& r : run(Family::PowerSum, 1, 1)) {
    const auto& th = r.final_theta;
    c.expect(std::abs(th.tau_inner - 6) <= 1e-9 && std::abs(th.tau_outer - 0.3) <= 1e-9,
             format("power-sum seed %llu ends at (%.4f, %.4f), not (6, 0.3)", static_cast<unsigned long long>(r.seed),
                    th.tau_inner, th.tau_outer));
    line += format(" (%.2f,%.2f)", th.tau_inner, th.tau_outer);
  }
  c.note(line);
  line = "softmax(-5,5):";
  for (const auto& r : run(Family::SoftmaxAgg, -5, 5)) {
    const auto& th = r.final_theta;
    c.expect(th.tau_inner > 0 && th.tau_outer < 0, format("adverse seed %llu ends at (%.3f, %.3f)",
                                                          static_cast<unsigned long long>(r.seed), th.tau_inner, th.tau_outer));
    line += format(" (%.2f,%.2f)", th.tau_inner, th.tau_outer);
  }
  c.note(line);
}

// Two seeds per pair; the per-pair gain is their mean.
void mgc_suite(Check& c) {
  const auto o = default_train_options(EnvKind::Mgc);
  const auto ss = seeds(2);
  const std::tuple<Family, Family, bool> pairs[] = {{Family::Min, Family::Max, true},
                                                    {Family::Mean, Family::Max, true},
                                                    {Family::Max, Family::Max, false},
                                                    {Family::Mean, Family::Mean, false}};
  for (auto [u, t, positive] : pairs) {
    const EnvDescriptor env{EnvKind::Mgc, {{u, 0}, {t, 0}, 2, 2}, {}};
    std::vector<double> g;
    std::string per_seed;
    for (auto s : ss) {
      g.push_back(train_single(env, o, s).final_gain);
      per_seed += format(" %.3f", g.back());
    }
    const double m = mean_of(g);
    if (positive)
      c.expect(m > 0.05, format("%s gain %.4f <= 0.05", name(u, t).c_str(), m));
    else
      c.expect(std::abs(m) <= 0.05, format("%s |gain| %.4f > 0.05", name(u, t).c_str(), m));
    c.note(format("%s %.3f [%s ]", name(u, t).c_str(), m, per_seed.c_str()));
  }
}

std::vector<AggregatorSpec> gradient_specs() {
  return {AggregatorSpec::mean(),         AggregatorSpec::power_sum(0.5), AggregatorSpec::power_sum(1),
          AggregatorSpec::power_sum(2.5), AggregatorSpec::power_mean(-2), AggregatorSpec::power_mean(0.5),
          AggregatorSpec::power_mean(3),  AggregatorSpec::lse(-3),        AggregatorSpec::lse(0.7),
          AggregatorSpec::lse(4),         AggregatorSpec::softmax(-4),    AggregatorSpec::softmax(0),
          AggregatorSpec::softmax(2)};
}

void gradient_suite(Check& c) {
  auto rel = [](double a, double b) { return std::abs(a - b) <= 1e-5 * std::max(1.0, std::abs(b)); };
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> interior(0.05, 0.95);
  for (const auto& s : gradient_specs())
    for (int probe = 0; probe < 200; ++probe) {
      std::vector<double> x(2 + probe % 4);
      for (double& v : x) v = interior(rng);
      const auto g = gradient_input(s, x);
      const auto fd = oracle::finite_difference([&](std::span<const double> y) { return evaluate(s, y); }, x, 1e-5);
      for (std::size_t k = 0; k < x.size(); ++k)
        c.expect(rel(g[k], fd[k]), format("input gradient %s: %.8g vs fd %.8g", describe(s).c_str(), g[k], fd[k]));
      if (!s.parametric()) continue;
      const double gp = gradient_parameter(s, x);
      const double fp = oracle::finite_difference([&](double t) { return evaluate(AggregatorSpec{s.family, t}, x); }, s.t, 1e-5);
      c.expect(rel(gp, fp), format("parameter gradient %s: %.8g vs fd %.8g", describe(s).c_str(), gp, fp));
    }

  Rng arng(9);
  for (Family fam : {Family::SoftmaxAgg, Family::PowerSum}) {
    std::uniform_real_distribution<double> tau(fam == Family::PowerSum ? 0.4 : -8.0, fam == Family::PowerSum ? 5.5 : 8.0);
    for (int probe = 0; probe < 500; ++probe) {
      const std::size_t n = 2 + probe % 3, m = 2 + (probe / 3) % 3;
      AllocationMatrix a(n, m);
      for (std::size_t i = 0; i < n; ++i) {
        const auto row = sample_simplex(m, arng);
        std::copy(row.begin(), row.end(), a.row(i).begin());
      }
      const EnvTheta th = make_theta(fam, tau(arng), tau(arng));
      const auto g = reward_theta_gradient(th, a);
      const double f1 = oracle::finite_difference(
          [&](double t) { return aggregate_reward(make_theta(fam, t, th.tau_outer).structure(n, m), a); }, th.tau_inner);
      const double f2 = oracle::finite_difference(
          [&](double t) { return aggregate_reward(make_theta(fam, th.tau_inner, t).structure(n, m), a); }, th.tau_outer);
      c.expect(rel(g[0], f1) && rel(g[1], f2),
               format("reward_theta_gradient %s (%.3f,%.3f): (%.8g,%.8g) vs fd (%.8g,%.8g)",
                      std::string(to_string(fam)).c_str(), th.tau_inner, th.tau_outer, g[0], g[1], f1, f2));
    }
  }

  // REINFORCE on the discrete game against the exact categorical gradient.
  const RewardStructure s{AggregatorSpec::min(), AggregatorSpec::max(), 2, 2};
  const EnvDescriptor env{EnvKind::MatrixDiscrete, s, {}};
  for (auto sharing : {Sharing::Heterogeneous, Sharing::Homogeneous}) {
    const auto p = make_policy(env, sharing, PolicyKind::CategoricalLogits, 11, 0.8);
    std::vector<std::vector<double>> per_agent;
    for (std::size_t i = 0; i < 2; ++i) per_agent.push_back(p.blocks[p.block_of(i)]);
    const auto exact = oracle::exact_categorical_gradient(s, per_agent);
    const std::size_t episodes = 100000;
    const auto b = rollout(env, p, episodes, true, 12);
    const auto g = policy_gradient(p, b);
    double mean_r = 0;
    for (double r : b.returns) mean_r += r / static_cast<double>(episodes);
    for (std::size_t blk = 0; blk < p.block_count(); ++blk) {
      const double z = std::exp(p.blocks[blk][0]) + std::exp(p.blocks[blk][1]);
      for (std::size_t k = 0; k < 2; ++k) {
        double want = 0;
        for (std::size_t i = 0; i < 2; ++i)
          if (p.block_of(i) == blk) want += exact[i][k];
        const double prob = std::exp(p.blocks[blk][k]) / z;
        double sum = 0, sq = 0;
        for (std::size_t e = 0; e < episodes; ++e) {
          double score = 0;
          for (std::size_t i = 0; i < 2; ++i)
            if (p.block_of(i) == blk) score += (b.choices[e * 2 + i] == k ? 1.0 : 0.0) - prob;
          const double term = (b.returns[e] - mean_r) * score;
          sum += term;
          sq += term * term;
        }
        const double mean = sum / static_cast<double>(episodes);
        const double se = std::sqrt((sq / static_cast<double>(episodes) - mean * mean) / static_cast<double>(episodes));
        c.expect(std::abs(g[blk][k] - want) <= 3 * se,
                 format("REINFORCE %s block %zu logit %zu: %.6f vs exact %.6f (3se %.2e)",
                        std::string(to_string(sharing)).c_str(), blk, k, g[blk][k], want, 3 * se));
      }
    }
  }
}

void case_studies(Check& c) {
  const std::tuple<std::size_t, std::size_t, std::vector<double>> blotto[] = {
      {2, 2, {0.5, 0.5}}, {2, 2, {0.6, 0.4}}, {3, 2, {0.3, 0.7}}, {3, 3, {1.0 / 3, 1.0 / 3, 1.0 / 3}}};
  for (const auto& [n, m, adv] : blotto) {
    const double g = *blotto_gain(n, m, BlottoAdversary::deterministic(adv)).delta_r_optimized;
    c.expect(std::abs(g) <= 1e-3, format("blotto N=%zu M=%zu: gain %.2e", n, m, g));
  }
  for (auto [n, m] : {std::pair<std::size_t, std::size_t>{2, 2}, {3, 2}, {4, 3}}) {
    const double closed = lbf_gain(n, m, 1);
    const double brute = *brute_force_gain_discrete({AggregatorSpec::mean(), AggregatorSpec::max(), n, m}).delta_r_bruteforce;
    c.expect(std::abs(closed - brute) <= 1e-12, format("lbf N=%zu M=%zu: %.17g vs brute force %.17g", n, m, closed, brute));
    c.note(format("lbf(%zu,%zu)=%.4f", n, m, closed));
  }
}

}  // namespace

int main(int argc, char** argv) {
  using D = std::tuple<Family, Family, double>;
  const std::vector<Criterion> all{
      {1, "closed-form tables", 120, closed_form_tables},
      {2, "discrete learning N=M=2", 600,
       [](Check& c) {
         train_table(c, EnvKind::MatrixDiscrete, 2,
                     all_pairs_around({D{Family::Min, Family::Mean, 0.5}, D{Family::Min, Family::Max, 1.0},
                                       D{Family::Mean, Family::Max, 0.5}},
                                      0.05));
       }},
      {3, "continuous learning N=M=2", 900,
       [](Check& c) {
         train_table(c, EnvKind::MatrixContinuous, 2,
                     all_pairs_around({D{Family::Min, Family::Max, 0.5}, D{Family::Mean, Family::Max, 0.5}}, 0.05));
       }},
      {4, "discrete learning N=M=4", 900,
       [](Check& c) {
         train_table(c, EnvKind::MatrixDiscrete, 4,
                     {{Family::Min, Family::Mean, 0.20, 0.30},
                      {Family::Min, Family::Max, 0.95, 1.05},
                      {Family::Mean, Family::Max, 0.70, 0.80}});
       }},
      {5, "softmax gain bounds", 300, softmax_bound_suite},
      {6, "curvature agreement", 60, curvature_suite},
      {7, "theorem properties", 300, theorem_properties},
      {8, "hetgps sign discovery", 1200, hetgps_suite},
      {9, "mgc sign pattern", 1800, mgc_suite},
      {10, "gradient oracles", 120, gradient_suite},
      {11, "case studies", 60, case_studies},
  };
  std::set<int> selected;
  for (int k = 1; k < argc; ++k) selected.insert(std::atoi(argv[k]));

  int failed = 0;
  for (const auto& cr : all) {
    if (!selected.empty() && !selected.count(cr.id)) continue;
    Check c;
    const auto start = std::chrono::steady_clock::now();
    std::string error;
    try {
      cr.body(c);
    } catch (const std::exception& e) {
      error = e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < cr.budget_s;
    const bool pass = error.empty() && c.failures == 0 && in_time;
    failed += !pass;
    std::printf("criterion %2d %s  %-28s %zu/%zu checks, %.1fs (budget %.0fs)%s\n", cr.id, pass ? "PASS" : "FAIL", cr.title,
                c.checks - c.failures, c.checks, secs, cr.budget_s, in_time ? "" : " OVER BUDGET");
    if (!error.empty()) std::printf("    error: %s\n", error.c_str());
    for (const auto& n : c.notes) std::printf("    %s\n", n.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
