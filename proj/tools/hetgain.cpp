// hetgain: heterogeneity gain tables, learning experiments and reward search.
//
//   hetgain <command> [--config FILE] [--key value ...]
//
// Every key can come from a flat `key = value` file; flags win. Each run writes
// manifest.json, result.json and CSVs to --output-path (or $HETGAIN_OUT/<command>).

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>

#include "hetgain/config.hpp"
#include "hetgain/curvature.hpp"
#include "hetgain/gains.hpp"
#include "hetgain/hetgps.hpp"
#include "hetgain/learn.hpp"
#include "hetgain/oracle.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace hetgain;

namespace {

std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << text;
}

/// Runs fn(i) for i in [0, n) on `jobs` threads; the first failure (by index) is rethrown.
void run_pool(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(jobs, n));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct Run {
  std::string command;
  ConfigMap config;
  fs::path out;
  std::size_t jobs = 1;

  std::string get(const std::string& k) const { return config.at(k); }
  double num(const std::string& k) const { return parse_double(k, get(k)); }
  std::size_t count(const std::string& k) const { return static_cast<std::size_t>(parse_unsigned(k, get(k))); }
  bool flag(const std::string& k) const { return parse_bool(k, get(k)); }

  void write(const std::string& name, const std::string& text) const { write_file(out / name, text); }
  void write_json(const std::string& name, const json& j) const { write(name, j.dump(2) + "\n"); }
};

fs::path output_dir(const std::string& command, const std::string& configured) {
  if (!configured.empty()) return configured;
  if (const char* root = std::getenv("HETGAIN_OUT"); root && *root) return fs::path(root) / command;
  return fs::path("hetgain-out") / command;
}

void write_manifest(const Run& r) {
  json cfg = json::object();
  for (const auto& [k, v] : r.config) cfg[k] = v;
  r.write_json("manifest.json", {{"tool", "hetgain"}, {"version", kToolVersion}, {"command", r.command}, {"config", cfg}});
}

json gain_json(const GainReport& g) {
  json j;
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  j["delta_r_theory"] = opt(g.delta_r_theory);
  j["delta_r_bruteforce"] = opt(g.delta_r_bruteforce);
  j["delta_r_optimized"] = opt(g.delta_r_optimized);
  j["r_het"] = g.r_het;
  j["r_hom"] = g.r_hom;
  j["hom_argmax"] = g.hom_argmax;
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < g.het_argmax.agents(); ++i) {
    const auto row = g.het_argmax.row(i);
    rows.emplace_back(row.begin(), row.end());
  }
  j["het_argmax"] = rows;
  j["method"] = g.method;
  j["hom_trivial"] = g.hom_trivial;
  return j;
}

// ---------------------------------------------------------------------------
// curvature

int cmd_curvature(Run& r) {
  const Family family = parse_family(r.get("family"));
  const auto ts = parse_double_list("t", r.get("t"));
  std::vector<std::size_t> dims;
  for (double d : parse_double_list("dims", r.get("dims"))) {
    if (d < 1 || d != std::floor(d)) throw ConfigError("dims must be positive integers");
    dims.push_back(static_cast<std::size_t>(d));
  }
  const std::size_t pairs = r.count("pairs");
  const std::uint64_t seed = parse_unsigned("seed", r.get("seed"));
  for (double t : ts) validate(AggregatorSpec{family, t});
  std::string csv = "family,t,dim,analytic,empirical,agree,evidence\n";
  json rows = json::array();
  std::printf("%-10s %-8s %-14s", "family", "t", "analytic");
  for (auto d : dims) std::printf(" empirical(d=%zu)", d);
  std::printf("\n");
  for (double t : ts) {
    const AggregatorSpec spec{family, t};
    const auto analytic = classify_analytic(spec);
    std::printf("%-10s %-8s %-14s", std::string(to_string(family)).c_str(), fmt_double(t).c_str(),
                std::string(to_string(analytic.classification)).c_str());
    for (auto d : dims) {
      const auto emp = classify_empirical(spec, d, pairs, seed);
      const bool agree = emp.classification == analytic.classification;
      csv += std::string(to_string(family)) + "," + fmt_double(t) + "," + std::to_string(d) + "," +
             std::string(to_string(analytic.classification)) + "," + std::string(to_string(emp.classification)) + "," +
             (agree ? "true" : "false") + "," + std::to_string(emp.evidence_count) + "\n";
      rows.push_back({{"t", t}, {"dim", d}, {"analytic", to_string(analytic.classification)},
                      {"empirical", to_string(emp.classification)}, {"agree", agree}});
      std::printf(" %-16s", std::string(to_string(emp.classification)).c_str());
    }
    std::printf("\n");
  }
  r.write("curvature.csv", csv);
  r.write_json("result.json", {{"family", to_string(family)}, {"rows", rows}});
  return 0;
}

// ---------------------------------------------------------------------------
// gain

struct PairGain {
  GainReport report;
  double delta = 0;  // brute force (discrete) or optimizer (continuous)
  std::optional<double> oracle;
};

PairGain pair_gain(const RewardStructure& s, AllocationMode mode, bool with_oracle, double resolution) {
  PairGain p;
  if (mode == AllocationMode::Discrete) {
    p.report = brute_force_gain_discrete(s);
    p.delta = *p.report.delta_r_bruteforce;
    if (with_oracle) p.oracle = *oracle::exhaustive_discrete_gain(s).delta_r_bruteforce;
  } else {
    p.report = optimize_gain_continuous(s);
    p.delta = *p.report.delta_r_optimized;
    if (with_oracle) p.oracle = *oracle::grid_gain(s, {resolution, s.agents, s.tasks}).delta_r_optimized;
  }
  if (!p.report.delta_r_theory && detail::is_extreme(s.outer.family) && detail::is_extreme(s.inner.family))
    p.report.delta_r_theory = closed_form_gain(s.outer.family, s.inner.family, mode, s.agents, s.tasks);
  return p;
}

int cmd_gain(Run& r) {
  const auto mode = parse_mode(r.get("mode"));
  const std::size_t n = r.count("N"), m = r.count("M");
  const bool with_oracle = r.flag("oracle");
  const double resolution = r.num("resolution");
  auto opt = [](const std::optional<double>& v) { return v ? fmt_double(*v) : std::string(); };
  std::string long_csv = "U,T,N,M,mode,delta_r_theory,delta_r,delta_r_oracle,r_het,r_hom\n";
  json result;
  auto row = [&](Family u, Family t, const PairGain& p) {
    long_csv += std::string(to_string(u)) + "," + std::string(to_string(t)) + "," + std::to_string(n) + "," +
                std::to_string(m) + "," + std::string(to_string(mode)) + "," + opt(p.report.delta_r_theory) + "," +
                fmt_double(p.delta) + "," + opt(p.oracle) + "," + fmt_double(p.report.r_het) + "," +
                fmt_double(p.report.r_hom) + "\n";
  };
  if (r.flag("all-pairs")) {
    const Family ext[] = {Family::Min, Family::Mean, Family::Max};
    std::vector<PairGain> cells(9);
    run_pool(9, r.jobs, [&](std::size_t k) {
      cells[k] = pair_gain({{ext[k / 3], 0}, {ext[k % 3], 0}, n, m}, mode, with_oracle, resolution);
    });
    std::string table = "U\\T,min,mean,max\n";
    json pairs = json::array();
    std::printf("U\\T      min        mean       max\n");
    for (std::size_t a = 0; a < 3; ++a) {
      table += std::string(to_string(ext[a]));
      std::printf("%-6s", std::string(to_string(ext[a])).c_str());
      for (std::size_t b = 0; b < 3; ++b) {
        const auto& p = cells[a * 3 + b];
        table += "," + fmt_double(p.delta);
        std::printf(" %-10.6g", p.delta);
        row(ext[a], ext[b], p);
        json j = gain_json(p.report);
        j["U"] = to_string(ext[a]);
        j["T"] = to_string(ext[b]);
        j["delta_r"] = p.delta;
        j["delta_r_oracle"] = p.oracle ? json(*p.oracle) : json(nullptr);
        pairs.push_back(j);
      }
      table += "\n";
      std::printf("\n");
    }
    r.write("gain_table.csv", table);
    result = {{"N", n}, {"M", m}, {"mode", to_string(mode)}, {"pairs", pairs}};
  } else {
    const Family u = parse_family(r.get("U")), t = parse_family(r.get("T"));
    const auto p = pair_gain({{u, 0}, {t, 0}, n, m}, mode, with_oracle, resolution);
    row(u, t, p);
    result = gain_json(p.report);
    result["delta_r"] = p.delta;
    result["delta_r_oracle"] = p.oracle ? json(*p.oracle) : json(nullptr);
    std::printf("U=%s T=%s N=%zu M=%zu %s: delta_r=%.10g", std::string(to_string(u)).c_str(),
                std::string(to_string(t)).c_str(), n, m, std::string(to_string(mode)).c_str(), p.delta);
    if (p.report.delta_r_theory) std::printf(" theory=%.10g", *p.report.delta_r_theory);
    if (p.oracle) std::printf(" oracle=%.10g", *p.oracle);
    std::printf("\n");
  }
  r.write("gain.csv", long_csv);
  r.write_json("result.json", result);
  return 0;
}

// ---------------------------------------------------------------------------
// train

int cmd_train(Run& r) {
  const EnvKind kind = parse_env_kind(r.get("env"));
  const std::size_t n = r.count("N"), m = r.count("M");
  RewardStructure s;
  if (r.get("family") == "none") {
    s = {{parse_family(r.get("U")), 0}, {parse_family(r.get("T")), 0}, n, m};
  } else {
    const Family f = parse_family(r.get("family"));
    s = make_theta(f, r.num("tau1"), r.num("tau2")).structure(n, m);
  }
  const EnvDescriptor env{kind, s, {}};
  TrainOptions o = default_train_options(kind);
  if (r.get("iterations").empty()) r.config["iterations"] = std::to_string(o.iterations);
  if (r.get("batch").empty()) r.config["batch"] = std::to_string(o.batch);
  if (r.get("lr").empty()) r.config["lr"] = fmt_double(o.lr);
  o.iterations = r.count("iterations");
  o.batch = r.count("batch");
  o.lr = r.num("lr");
  o.init_noise = r.num("init-noise");
  if (o.batch < 1) throw ConfigError("batch must be >= 1");
  const auto seeds = parse_seeds(r.get("seeds"));
  write_manifest(r);

  TrainReport report;
  report.seeds = seeds;
  report.runs.resize(seeds.size());
  run_pool(seeds.size(), r.jobs, [&](std::size_t k) { report.runs[k] = train_single(env, o, seeds[k]); });
  json runs = json::array();
  std::vector<double> gains;
  for (const auto& run : report.runs) {
    std::ostringstream csv;
    write_train_csv(csv, run);
    r.write("train_seed" + std::to_string(run.seed) + ".csv", csv.str());
    runs.push_back({{"seed", run.seed}, {"final_gain", run.final_gain}, {"final_return_het", run.final_return_het},
                    {"final_return_hom", run.final_return_hom}});
    gains.push_back(run.final_gain);
    report.final_gain += run.final_gain;
  }
  report.final_gain /= static_cast<double>(report.runs.size());
  double var = 0;
  for (double g : gains) var += (g - report.final_gain) * (g - report.final_gain);
  const double sd = std::sqrt(var / static_cast<double>(gains.size()));
  std::ostringstream agg;
  write_train_aggregate_csv(agg, report);
  r.write("train_aggregate.csv", agg.str());
  r.write_json("result.json", {{"runs", runs}, {"final_gain_mean", report.final_gain}, {"final_gain_std", sd}});
  std::printf("env=%s U=%s T=%s N=%zu M=%zu seeds=%zu: final gain %.6f +- %.6f\n", std::string(to_string(kind)).c_str(),
              describe(s.outer).c_str(), describe(s.inner).c_str(), n, m, seeds.size(), report.final_gain, sd);
  return 0;
}

// ---------------------------------------------------------------------------
// hetgps

int cmd_hetgps(Run& r) {
  const EnvKind kind = parse_env_kind(r.get("env"));
  const Family family = parse_family(r.get("family"));
  if (r.get("init").empty()) r.config["init"] = family == Family::PowerSum ? "1,1" : "0,0";
  const auto init = parse_double_list("init", r.get("init"));
  if (init.size() != 2) throw ConfigError("init takes two values: tau1,tau2");
  HetgpsConfig c = default_hetgps_config(kind, family, init[0], init[1]);
  if (r.get("alpha").empty()) r.config["alpha"] = fmt_double(c.alpha);
  if (r.get("batch").empty()) r.config["batch"] = std::to_string(c.train.batch);
  if (r.get("lr").empty()) r.config["lr"] = fmt_double(c.train.lr);
  if (r.get("init-noise").empty()) r.config["init-noise"] = fmt_double(c.train.init_noise);
  c.agents = r.count("N");
  c.tasks = r.count("M");
  c.alpha = r.num("alpha");
  c.regime = parse_regime(r.get("regime"));
  c.env_every = r.count("env-every");
  c.agent_iters = r.count("agent-iters");
  c.env_iters = r.count("env-iters");
  c.iterations = r.count("iterations");
  c.direction = parse_direction(r.get("direction"));
  c.train.batch = r.count("batch");
  c.train.lr = r.num("lr");
  c.train.init_noise = r.num("init-noise");
  if (c.train.batch < 1) throw ConfigError("batch must be >= 1");
  validate(c);
  const auto seeds = parse_seeds(r.get("seeds"));
  write_manifest(r);

  std::vector<HetgpsRun> runs(seeds.size());
  run_pool(seeds.size(), r.jobs, [&](std::size_t k) { runs[k] = run_hetgps_seed(c, seeds[k]); });
  json out = json::array();
  std::string summary = "seed,tau1,tau2,final_gain\n";
  for (const auto& run : runs) {
    std::ostringstream csv;
    write_hetgps_csv(csv, run);
    r.write("hetgps_seed" + std::to_string(run.seed) + ".csv", csv.str());
    out.push_back({{"seed", run.seed}, {"tau1", run.final_theta.tau_inner}, {"tau2", run.final_theta.tau_outer},
                   {"final_gain", run.final_gain}});
    summary += std::to_string(run.seed) + "," + fmt_double(run.final_theta.tau_inner) + "," +
               fmt_double(run.final_theta.tau_outer) + "," + fmt_double(run.final_gain) + "\n";
    std::printf("seed %llu: tau1=%.4f tau2=%.4f gain=%.4f\n", static_cast<unsigned long long>(run.seed),
                run.final_theta.tau_inner, run.final_theta.tau_outer, run.final_gain);
  }
  r.write("hetgps_final.csv", summary);
  r.write_json("result.json", {{"family", to_string(family)}, {"runs", out}});
  return 0;
}

// ---------------------------------------------------------------------------
// casestudy

int cmd_casestudy(Run& r) {
  const std::string study = r.get("study");
  const std::size_t n = r.count("N"), m = r.count("M");
  json result;
  if (study == "blotto") {
    BlottoAdversary adv;
    const std::string kind = r.get("adversary");
    if (kind == "deterministic") {
      std::vector<double> alloc(m, 1.0 / static_cast<double>(m));
      if (!r.get("adversary-allocation").empty()) alloc = parse_double_list("adversary-allocation", r.get("adversary-allocation"));
      if (alloc.size() != m) throw ConfigError("adversary-allocation needs M values");
      adv = BlottoAdversary::deterministic(alloc);
    } else if (kind == "uniform") {
      adv = BlottoAdversary::uniform_simplex(m, r.count("samples"), parse_unsigned("seed", r.get("seed")));
    } else {
      throw ConfigError("unknown adversary '" + kind + "' (expected deterministic or uniform)");
    }
    const auto g = blotto_gain(n, m, adv);
    result = gain_json(g);
    result["study"] = "blotto";
    std::printf("blotto N=%zu M=%zu adversary=%s: delta_r=%.10g (r_het=%.10g r_hom=%.10g)\n", n, m, kind.c_str(),
                *g.delta_r_optimized, g.r_het, g.r_hom);
    r.write("casestudy.csv", "study,N,M,delta_r,r_het,r_hom\nblotto," + std::to_string(n) + "," + std::to_string(m) + "," +
                                 fmt_double(*g.delta_r_optimized) + "," + fmt_double(g.r_het) + "," + fmt_double(g.r_hom) +
                                 "\n");
  } else if (study == "lbf") {
    const std::size_t level = r.count("L");
    const double closed = lbf_gain(n, m, level);
    const double enumerated = lbf_gain_enumerated(n, m, level);
    result = {{"study", "lbf"}, {"closed_form", closed}, {"enumerated", enumerated}};
    std::string check;
    if (level == 1) {
      // With L = 1 the normalized reward is (U=mean, T=max) on discrete efforts.
      const double brute = *brute_force_gain_discrete({{Family::Mean, 0}, {Family::Max, 0}, n, m}).delta_r_bruteforce;
      result["bruteforce_mean_max"] = brute;
      check = fmt_double(brute);
    }
    result["agree"] = std::abs(closed - enumerated) <= 1e-12 &&
                      (level != 1 || std::abs(closed - result["bruteforce_mean_max"].get<double>()) <= 1e-12);
    std::printf("lbf N=%zu M=%zu L=%zu: gain=%.10g enumerated=%.10g%s\n", n, m, level, closed, enumerated,
                check.empty() ? "" : (" bruteforce=" + check).c_str());
    r.write("casestudy.csv", "study,N,M,L,closed_form,enumerated,bruteforce_mean_max\nlbf," + std::to_string(n) + "," +
                                 std::to_string(m) + "," + std::to_string(level) + "," + fmt_double(closed) + "," +
                                 fmt_double(enumerated) + "," + check + "\n");
  } else {
    throw ConfigError("unknown case study '" + study + "' (expected blotto or lbf)");
  }
  r.write_json("result.json", result);
  return 0;
}

int dispatch(Run& r) {
  fs::create_directories(r.out);
  if (r.command == "curvature") return write_manifest(r), cmd_curvature(r);
  if (r.command == "gain") return write_manifest(r), cmd_gain(r);
  if (r.command == "train") return cmd_train(r);
  if (r.command == "hetgps") return cmd_hetgps(r);
  return write_manifest(r), cmd_casestudy(r);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"heterogeneity gain toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));
  struct Sub {
    CLI::App* app;
    std::string config_path;
    ConfigMap flags;
  };
  std::map<std::string, Sub> subs;
  for (const auto& name : command_names()) {
    auto& s = subs[name];
    s.app = app.add_subcommand(name);
    s.app->add_option("--config", s.config_path, "flat key = value config file");
    for (const auto& k : command_keys(name)) {
      auto* flags = &s.flags;
      const std::string key = k.key;
      const std::string help = k.help + (k.default_value.empty() ? "" : " [" + k.default_value + "]");
      if (k.default_value == "false") {
        s.app->add_flag_callback("--" + key, [flags, key] { (*flags)[key] = "true"; }, help);
        continue;
      }
      std::string names = "--" + key;
      if (key == "seeds") names += ",--seed";
      if (key == "output-path") names += ",--out";
      if (key == "study") {
        s.app->add_option_function<std::string>(key, [flags, key](const std::string& v) { (*flags)[key] = v; }, help);
        continue;
      }
      s.app->add_option_function<std::string>(names, [flags, key](const std::string& v) { (*flags)[key] = v; }, help)
          ->allow_extra_args(false);
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(ErrorKind::Config);
  }
  try {
    for (auto& [name, s] : subs) {
      if (!s.app->parsed()) continue;
      Run r;
      r.command = name;
      const ConfigMap file = s.config_path.empty() ? ConfigMap{} : parse_config_text(read_file(s.config_path), s.config_path);
      r.config = resolve_config(name, file, s.flags);
      r.jobs = std::max<std::size_t>(1, r.count("jobs"));
      r.out = output_dir(name, r.get("output-path"));
      r.config["output-path"] = r.out.string();
      return dispatch(r);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "hetgain: %s\n", e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "hetgain: %s\n", e.what());
    return 1;
  }
  return 0;
}
