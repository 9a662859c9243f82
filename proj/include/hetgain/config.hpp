#pragma once

// Flat `key = value` run configs for the command-line front end.

#include <charconv>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "hetgain/error.hpp"

namespace hetgain {

inline constexpr std::string_view kToolVersion = "1.0.0";

/// Ordered so serialized configs are stable.
using ConfigMap = std::map<std::string, std::string>;

struct KeySpec {
  std::string key;
  std::string default_value;  // empty: resolved by the command (for example per-env defaults)
  std::string help;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<KeySpec> with_common(std::vector<KeySpec> keys) {
  keys.push_back({"output-path", "", "output directory (default $HETGAIN_OUT/<command> or hetgain-out/<command>)"});
  keys.push_back({"jobs", "1", "worker threads for independent seeds"});
  return keys;
}

}  // namespace detail

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"curvature", "gain", "train", "hetgps", "casestudy"};
  return names;
}

inline const std::vector<KeySpec>& command_keys(std::string_view command) {
  static const std::map<std::string, std::vector<KeySpec>, std::less<>> table{
      {"curvature", detail::with_common({
                        {"family", "softmax", "aggregator family"},
                        {"t", "-3,0,3", "comma-separated parameter values"},
                        {"dims", "2,3,5", "comma-separated input dimensions"},
                        {"pairs", "2000", "majorization pairs per sweep point"},
                        {"seed", "0", "sampling seed"},
                    })},
      {"gain", detail::with_common({
                   {"U", "min", "outer aggregator"},
                   {"T", "max", "inner aggregator"},
                   {"N", "2", "agents"},
                   {"M", "2", "tasks"},
                   {"mode", "continuous", "continuous or discrete efforts"},
                   {"all-pairs", "false", "emit the 3x3 {min,mean,max} table"},
                   {"oracle", "false", "also run the grid (continuous) or exhaustive (discrete) oracle"},
                   {"resolution", "0.02", "grid oracle resolution"},
               })},
      {"train", detail::with_common({
                    {"env", "matrix-discrete", "matrix-discrete, matrix-continuous or mgc"},
                    {"U", "min", "outer aggregator (ignored when family is set)"},
                    {"T", "max", "inner aggregator (ignored when family is set)"},
                    {"family", "none", "softmax or power-sum for a parametric reward, or none"},
                    {"tau1", "0", "inner parameter when family is set"},
                    {"tau2", "0", "outer parameter when family is set"},
                    {"N", "2", "agents"},
                    {"M", "2", "tasks"},
                    {"iterations", "", "training iterations (per-env default)"},
                    {"batch", "", "episodes per iteration (per-env default)"},
                    {"lr", "", "policy learning rate (per-env default)"},
                    {"init-noise", "0", "std of centered per-agent initial logit noise"},
                    {"seeds", "0..8", "seed list: a..b, a,b,c or a single value"},
                })},
      {"hetgps", detail::with_common({
                     {"env", "matrix-continuous", "matrix-discrete, matrix-continuous or mgc"},
                     {"family", "softmax", "softmax or power-sum"},
                     {"init", "", "initial tau1,tau2 (default 0,0 for softmax, 1,1 for power-sum)"},
                     {"alpha", "", "environment learning rate (per-family default)"},
                     {"regime", "concurrent", "concurrent or alternated"},
                     {"env-every", "1", "concurrent: environment step every x iterations"},
                     {"agent-iters", "50", "alternated: agent iterations per cycle"},
                     {"env-iters", "5", "alternated: environment iterations per cycle"},
                     {"iterations", "1500", "total iterations"},
                     {"direction", "maximize", "maximize or minimize"},
                     {"N", "2", "agents"},
                     {"M", "2", "tasks"},
                     {"batch", "", "episodes per iteration (per-env default)"},
                     {"lr", "", "policy learning rate (per-env default)"},
                     {"init-noise", "", "std of centered per-agent initial logit noise (per-env default)"},
                     {"seeds", "0..4", "seed list: a..b, a,b,c or a single value"},
                 })},
      {"casestudy", detail::with_common({
                        {"study", "blotto", "blotto or lbf"},
                        {"N", "2", "agents"},
                        {"M", "2", "battlefields or items"},
                        {"L", "1", "lbf item level"},
                        {"adversary", "deterministic", "blotto adversary: deterministic or uniform"},
                        {"adversary-allocation", "", "deterministic adversary troops per battlefield (default uniform)"},
                        {"samples", "1000", "uniform adversary draws"},
                        {"seed", "0", "sampling seed"},
                    })},
  };
  const auto it = table.find(command);
  if (it == table.end()) throw ConfigError("unknown command '" + std::string(command) + "'");
  return it->second;
}

/// `key = value` lines; `#` starts a comment; blank lines ignored.
inline ConfigMap parse_config_text(std::string_view text, std::string_view origin = "config") {
  ConfigMap out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto where = std::string(origin) + ":" + std::to_string(line_no);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected 'key = value', got '" + std::string(line) + "'");
    const auto key = std::string(detail::trim(line.substr(0, eq)));
    const auto value = std::string(detail::trim(line.substr(eq + 1)));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (!out.emplace(key, value).second) throw ConfigError(where + ": duplicate key '" + key + "'");
  }
  return out;
}

inline std::string to_config_text(const ConfigMap& c) {
  std::string s;
  for (const auto& [k, v] : c) s += k + " = " + v + "\n";
  return s;
}

/// Defaults, then file values, then flags. Unknown keys in either source are rejected.
inline ConfigMap resolve_config(std::string_view command, const ConfigMap& file, const ConfigMap& flags) {
  const auto& keys = command_keys(command);
  ConfigMap out;
  for (const auto& k : keys) out[k.key] = k.default_value;
  for (const auto* src : {&file, &flags})
    for (const auto& [k, v] : *src) {
      if (!out.count(k)) throw ConfigError("unknown key '" + k + "' for command " + std::string(command));
      out[k] = v;
    }
  return out;
}

// ---------------------------------------------------------------------------
// typed values

inline double parse_double(std::string_view key, std::string_view v) {
  double x = 0;
  const auto s = detail::trim(v);
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    throw ConfigError("key '" + std::string(key) + "': '" + std::string(v) + "' is not a number");
  return x;
}

inline std::uint64_t parse_unsigned(std::string_view key, std::string_view v) {
  std::uint64_t x = 0;
  const auto s = detail::trim(v);
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    throw ConfigError("key '" + std::string(key) + "': '" + std::string(v) + "' is not a non-negative integer");
  return x;
}

inline bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("key '" + std::string(key) + "': '" + std::string(v) + "' is not a boolean");
}

inline std::vector<std::string_view> split_list(std::string_view v) {
  std::vector<std::string_view> out;
  while (true) {
    const auto c = v.find(',');
    out.push_back(detail::trim(v.substr(0, c)));
    if (c == std::string_view::npos) break;
    v = v.substr(c + 1);
  }
  return out;
}

inline std::vector<double> parse_double_list(std::string_view key, std::string_view v) {
  std::vector<double> out;
  for (auto item : split_list(v)) out.push_back(parse_double(key, item));
  return out;
}

/// `a..b` (inclusive), `a,b,c`, or a single seed.
inline std::vector<std::uint64_t> parse_seeds(std::string_view v) {
  v = detail::trim(v);
  if (const auto dots = v.find(".."); dots != std::string_view::npos) {
    const auto a = parse_unsigned("seeds", v.substr(0, dots));
    const auto b = parse_unsigned("seeds", v.substr(dots + 2));
    if (b < a) throw ConfigError("seed range '" + std::string(v) + "' is empty");
    if (b - a >= 100000) throw ConfigError("seed range '" + std::string(v) + "' is too long");
    std::vector<std::uint64_t> out;
    for (auto s = a; s <= b; ++s) out.push_back(s);
    return out;
  }
  std::vector<std::uint64_t> out;
  for (auto item : split_list(v)) out.push_back(parse_unsigned("seeds", item));
  return out;
}

}  // namespace hetgain
