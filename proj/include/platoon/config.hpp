#pragma once

// Flat "key = value" configuration files. Lines starting with '#' are
// comments. Every key maps to exactly one field; unknown keys, malformed
// values and semantic violations are all collected and reported together.
//
//   schema_version = 1
//   gains.kp = 0.1
//   sweep.kp = -0.1, 0.1          # explicit list
//   sweep.h  = 0.5:1.0:11         # lo:hi:count, inclusive

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <vector>

#include "platoon/error.hpp"
#include "platoon/scenario.hpp"
#include "platoon/stability.hpp"

namespace platoon {

inline constexpr int kSchemaVersion = 1;

// Scenario plus the analysis requests that share a config file.
struct RunConfig {
  int schema_version = kSchemaVersion;
  ScenarioConfig scenario{};
  SweepGrid freq{};
  RegionGrid region{};
  bool region_norms = false;  // also sweep |H_l| at every region point

  friend bool operator==(const RunConfig& a, const RunConfig& b) {
    auto grid_eq = [](const RegionGrid& x, const RegionGrid& y) {
      return x.tau == y.tau && x.h == y.h && x.delta == y.delta && x.kp == y.kp &&
             x.kv == y.kv && x.ka == y.ka && x.r == y.r;
    };
    return a.schema_version == b.schema_version && a.scenario == b.scenario &&
           a.freq.omega_min == b.freq.omega_min && a.freq.omega_max == b.freq.omega_max &&
           a.freq.points == b.freq.points && a.freq.include_zero == b.freq.include_zero &&
           grid_eq(a.region, b.region) && a.region_norms == b.region_norms;
  }
};

// Shortest decimal text that parses back to exactly `x`.
inline std::string format_number(double x) {
  if (x == 0.0) x = 0.0;  // no "-0" in outputs
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc{}) throw InvalidArgument("format_number: conversion failed");
  return std::string(buf, end);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double x = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return x;
}

inline std::optional<std::uint64_t> parse_uint(std::string_view s) {
  s = trim(s);
  std::uint64_t x = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return x;
}

inline std::optional<bool> parse_bool(std::string_view s) {
  s = trim(s);
  if (s == "true" || s == "1" || s == "on") return true;
  if (s == "false" || s == "0" || s == "off") return false;
  return std::nullopt;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// "a, b, c" or "lo:hi:count".
inline std::optional<std::vector<double>> parse_list(std::string_view s) {
  s = trim(s);
  std::vector<double> out;
  if (s.empty()) return out;
  if (s.find(':') != std::string_view::npos) {
    const auto parts = split(s, ':');
    if (parts.size() != 3) return std::nullopt;
    const auto lo = parse_double(parts[0]);
    const auto hi = parse_double(parts[1]);
    const auto count = parse_uint(parts[2]);
    if (!lo || !hi || !count || *count == 0) return std::nullopt;
    // Capped so an oversized range reaches the sweep budget check rather
    // than exhausting memory here.
    const std::uint64_t n = std::min<std::uint64_t>(*count, kSweepBudget + 1);
    out.reserve(static_cast<std::size_t>(n));
    for (std::uint64_t k = 0; k < n; ++k) {
      out.push_back(n == 1 ? *lo : *lo + (*hi - *lo) * static_cast<double>(k) / static_cast<double>(n - 1));
    }
    return out;
  }
  for (auto part : split(s, ',')) {
    const auto x = parse_double(part);
    if (!x) return std::nullopt;
    out.push_back(*x);
  }
  return out;
}

inline std::string format_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) out += ", ";
    out += format_number(v[k]);
  }
  return out;
}

struct Field {
  std::string key;
  // Returns an error message, or empty on success.
  std::function<std::string(RunConfig&, std::string_view)> parse;
  std::function<std::string(const RunConfig&)> format;
};

template <class Get>
Field real_field(std::string key, Get get) {
  return {key,
          [get](RunConfig& c, std::string_view v) -> std::string {
            const auto x = parse_double(v);
            if (!x) return "expected a number";
            get(c) = *x;
            return {};
          },
          [get](const RunConfig& c) { return format_number(get(c)); }};
}

template <class Get>
Field count_field(std::string key, Get get) {
  return {key,
          [get](RunConfig& c, std::string_view v) -> std::string {
            const auto x = parse_uint(v);
            if (!x) return "expected a non-negative integer";
            get(c) = static_cast<std::remove_reference_t<decltype(get(c))>>(*x);
            return {};
          },
          [get](const RunConfig& c) { return std::to_string(get(c)); }};
}

template <class Get>
Field bool_field(std::string key, Get get) {
  return {key,
          [get](RunConfig& c, std::string_view v) -> std::string {
            const auto x = parse_bool(v);
            if (!x) return "expected true or false";
            get(c) = *x;
            return {};
          },
          [get](const RunConfig& c) {
            return std::string(get(c) ? "true" : "false");
          }};
}

template <class Get>
Field list_field(std::string key, Get get) {
  return {key,
          [get](RunConfig& c, std::string_view v) -> std::string {
            const auto x = parse_list(v);
            if (!x) return "expected a comma list or lo:hi:count";
            get(c) = *x;
            return {};
          },
          [get](const RunConfig& c) { return format_list(get(c)); }};
}

inline const std::vector<Field>& fields() {
  static const std::vector<Field> kFields = [] {
    std::vector<Field> f;
    f.push_back(count_field("schema_version", [](auto& c) -> auto& { return c.schema_version; }));
    f.push_back(count_field("n_followers", [](auto& c) -> auto& { return c.scenario.n_followers; }));
    f.push_back(count_field("r_max", [](auto& c) -> auto& { return c.scenario.r_max; }));
    f.push_back(real_field("vehicle.tau", [](auto& c) -> auto& { return c.scenario.vehicle.tau; }));
    f.push_back(real_field("vehicle.v_min", [](auto& c) -> auto& { return c.scenario.vehicle.v_min; }));
    f.push_back(real_field("policy.h", [](auto& c) -> auto& { return c.scenario.policy.h; }));
    f.push_back(real_field("policy.d", [](auto& c) -> auto& { return c.scenario.policy.d; }));
    f.push_back(real_field("gains.kp", [](auto& c) -> auto& { return c.scenario.gains.kp; }));
    f.push_back(real_field("gains.kv", [](auto& c) -> auto& { return c.scenario.gains.kv; }));
    f.push_back(real_field("gains.ka", [](auto& c) -> auto& { return c.scenario.gains.ka; }));
    f.push_back(real_field("channel.delta", [](auto& c) -> auto& { return c.scenario.channel.delta; }));
    f.push_back(real_field("channel.loss_prob", [](auto& c) -> auto& { return c.scenario.channel.loss_prob; }));
    f.push_back(count_field("seed", [](auto& c) -> auto& { return c.scenario.channel.seed; }));
    f.push_back(real_field("leader.a_step", [](auto& c) -> auto& { return c.scenario.leader.a_step; }));
    f.push_back(real_field("leader.t_step", [](auto& c) -> auto& { return c.scenario.leader.t_step; }));
    f.push_back(real_field("leader.a_dist", [](auto& c) -> auto& { return c.scenario.leader.a_dist; }));
    f.push_back(real_field("leader.omega_0", [](auto& c) -> auto& { return c.scenario.leader.omega_0; }));
    f.push_back(real_field("leader.t_dist", [](auto& c) -> auto& { return c.scenario.leader.t_dist; }));
    f.push_back(real_field("leader.a_brake", [](auto& c) -> auto& { return c.scenario.leader.a_brake; }));
    f.push_back(real_field("leader.t_brake", [](auto& c) -> auto& { return c.scenario.leader.t_brake; }));
    f.push_back(real_field("leader.t_cruise", [](auto& c) -> auto& { return c.scenario.leader.t_cruise; }));
    f.push_back(real_field("leader.a0", [](auto& c) -> auto& { return c.scenario.leader.a0; }));
    f.push_back(real_field("dt", [](auto& c) -> auto& { return c.scenario.dt; }));
    f.push_back(real_field("t_end", [](auto& c) -> auto& { return c.scenario.t_end; }));
    f.push_back(bool_field("clamp", [](auto& c) -> auto& { return c.scenario.clamp; }));
    f.push_back({"integrator",
                 [](RunConfig& c, std::string_view v) -> std::string {
                   v = trim(v);
                   if (v == "exact_hold") c.scenario.integrator = Discretization::exact_hold;
                   else if (v == "trapezoidal") c.scenario.integrator = Discretization::trapezoidal;
                   else return "expected exact_hold or trapezoidal";
                   return {};
                 },
                 [](const RunConfig& c) {
                   return std::string(c.scenario.integrator == Discretization::exact_hold
                                          ? "exact_hold"
                                          : "trapezoidal");
                 }});
    f.push_back({"input_hold",
                 [](RunConfig& c, std::string_view v) -> std::string {
                   v = trim(v);
                   if (v == "step_average") c.scenario.input_hold = InputHold::step_average;
                   else if (v == "zero_order") c.scenario.input_hold = InputHold::zero_order;
                   else return "expected step_average or zero_order";
                   return {};
                 },
                 [](const RunConfig& c) {
                   return std::string(c.scenario.input_hold == InputHold::step_average
                                          ? "step_average"
                                          : "zero_order");
                 }});
    f.push_back(real_field("freq.omega_min", [](auto& c) -> auto& { return c.freq.omega_min; }));
    f.push_back(real_field("freq.omega_max", [](auto& c) -> auto& { return c.freq.omega_max; }));
    f.push_back(count_field("freq.points", [](auto& c) -> auto& { return c.freq.points; }));
    f.push_back(bool_field("freq.include_zero", [](auto& c) -> auto& { return c.freq.include_zero; }));
    f.push_back(list_field("sweep.tau", [](auto& c) -> auto& { return c.region.tau; }));
    f.push_back(list_field("sweep.h", [](auto& c) -> auto& { return c.region.h; }));
    f.push_back(list_field("sweep.delta", [](auto& c) -> auto& { return c.region.delta; }));
    f.push_back(list_field("sweep.kp", [](auto& c) -> auto& { return c.region.kp; }));
    f.push_back(list_field("sweep.kv", [](auto& c) -> auto& { return c.region.kv; }));
    f.push_back(list_field("sweep.ka", [](auto& c) -> auto& { return c.region.ka; }));
    f.push_back({"sweep.r",
                 [](RunConfig& c, std::string_view v) -> std::string {
                   c.region.r.clear();
                   if (trim(v).empty()) return {};
                   for (auto part : split(v, ',')) {
                     const auto x = parse_uint(part);
                     if (!x || *x == 0) return "expected a comma list of positive integers";
                     c.region.r.push_back(static_cast<std::size_t>(*x));
                   }
                   return {};
                 },
                 [](const RunConfig& c) {
                   std::string out;
                   for (std::size_t k = 0; k < c.region.r.size(); ++k) {
                     if (k) out += ", ";
                     out += std::to_string(c.region.r[k]);
                   }
                   return out;
                 }});
    f.push_back(bool_field("sweep.norms", [](auto& c) -> auto& { return c.region_norms; }));
    return f;
  }();
  return kFields;
}

inline const Field* find_field(std::string_view key) {
  for (const auto& f : fields()) {
    if (f.key == key) return &f;
  }
  return nullptr;
}

}  // namespace detail

// Applies one "key = value" assignment; returns an error message or empty.
inline std::string apply_setting(RunConfig& cfg, std::string_view key, std::string_view value) {
  const auto* field = detail::find_field(detail::trim(key));
  if (!field) return "unknown key '" + std::string(detail::trim(key)) + "'";
  auto err = field->parse(cfg, value);
  if (!err.empty()) return std::string(detail::trim(key)) + ": " + err;
  return {};
}

// Applies "key=value" overrides (as given to --set) on top of `cfg`.
inline void apply_overrides(RunConfig& cfg, const std::vector<std::string>& overrides,
                            std::vector<std::string>& errors) {
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      errors.push_back("override '" + kv + "' is not of the form key=value");
      continue;
    }
    if (auto err = apply_setting(cfg, std::string_view(kv).substr(0, eq),
                                 std::string_view(kv).substr(eq + 1));
        !err.empty()) {
      errors.push_back("override: " + err);
    }
  }
}

// Parses configuration text on top of the defaults. Collects syntax errors;
// semantic validation is left to the caller (see validate_run_config).
inline RunConfig parse_config(std::string_view text, std::vector<std::string>& errors) {
  RunConfig cfg;
  std::map<std::string, int, std::less<>> seen;
  int line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = line;
    if (const auto hash = sv.find('#'); hash != std::string_view::npos) sv = sv.substr(0, hash);
    sv = detail::trim(sv);
    if (sv.empty()) continue;
    const auto eq = sv.find('=');
    const auto where = "line " + std::to_string(line_no) + ": ";
    if (eq == std::string_view::npos) {
      errors.push_back(where + "expected key = value");
      continue;
    }
    const std::string key(detail::trim(sv.substr(0, eq)));
    if (auto [it, fresh] = seen.emplace(key, line_no); !fresh) {
      errors.push_back(where + "duplicate key '" + key + "' (first on line " +
                       std::to_string(it->second) + ")");
      continue;
    }
    if (auto err = apply_setting(cfg, key, sv.substr(eq + 1)); !err.empty()) {
      errors.push_back(where + err);
    }
  }
  if (!seen.contains("schema_version")) errors.emplace_back("missing schema_version");
  return cfg;
}

inline std::vector<std::string> validate_run_config(const RunConfig& cfg) {
  std::vector<std::string> out;
  if (cfg.schema_version != kSchemaVersion) {
    out.push_back("unsupported schema_version " + std::to_string(cfg.schema_version) +
                  " (expected " + std::to_string(kSchemaVersion) + ")");
  }
  for (auto& v : cfg.scenario.violations()) out.push_back(std::move(v));
  if (!(cfg.freq.omega_min > 0.0) || !(cfg.freq.omega_max > cfg.freq.omega_min)) {
    out.emplace_back("freq range must satisfy 0 < omega_min < omega_max");
  }
  if (cfg.freq.points < 2) out.emplace_back("freq.points must be >= 2");
  return out;
}

// Reads, overrides and validates a config file; throws ValidationError with
// every problem found.
inline RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
  std::ifstream in(path);
  if (!in) throw ValidationError({"cannot read config file '" + path + "'"});
  std::stringstream buf;
  buf << in.rdbuf();
  std::vector<std::string> errors;
  RunConfig cfg = parse_config(buf.str(), errors);
  apply_overrides(cfg, overrides, errors);
  for (auto& v : validate_run_config(cfg)) errors.push_back(std::move(v));
  if (!errors.empty()) throw ValidationError(std::move(errors));
  return cfg;
}

// Inverse of parse_config: every field, one per line.
inline std::string serialize_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& f : detail::fields()) {
    out += f.key;
    out += " = ";
    out += f.format(cfg);
    out += '\n';
  }
  return out;
}

}  // namespace platoon
