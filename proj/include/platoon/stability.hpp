#pragma once

// Internal and string stability certification for a homogeneous platoon
// under MPF control with uniform communication delay, plus direct frequency
// sweeps of the predecessor-to-follower transfer functions
//
//   H_l(s) = e^{-delta s} (ka s^2 + (kv - kp h (r - l)) s + kp)
//            / (tau s^3 + s^2 + r e^{-delta s} (ka s^2 + (kv + kp h) s + kp)),
//
// for l = 1..r. String stability requires sup_w |H_l(jw)| <= 1/r for all l.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "platoon/control.hpp"
#include "platoon/error.hpp"

namespace platoon {

struct PlatoonParams {
  double tau = 0.9;
  double h = 0.78;
  double delta = 0.05;
  std::size_t r = 2;
  Gains gains{};

  // Empty when the parameter set is admissible.
  std::vector<std::string> violations() const {
    std::vector<std::string> out;
    if (!(tau > 0.0)) out.emplace_back("tau must be > 0");
    if (!(h >= 0.0)) out.emplace_back("h must be >= 0");
    if (!(delta >= 0.0)) out.emplace_back("delta must be >= 0");
    if (r < 1) out.emplace_back("r must be >= 1");
    if (!std::isfinite(gains.kp) || !std::isfinite(gains.kv) || !std::isfinite(gains.ka)) {
      out.emplace_back("gains must be finite");
    }
    return out;
  }
};

// Values below this magnitude count as zero for the inequality condition
// on k_p - tau (k_v + k_p h) + tau^2 k_p.
inline constexpr double kNonZeroBand = 1e-9;

struct InternalVerdict {
  bool kp_positive = false;       // kp > 0
  bool ka_positive = false;       // ka > 0
  double nonsingular_value = 0;   // kp - tau (kv + kp h) + tau^2 kp
  bool nonsingular = false;       // |nonsingular_value| > kNonZeroBand
  double damping_lhs = 0;         // kv + kp h
  double damping_rhs = 0;         // kp tau
  bool damping = false;           // lhs >= rhs
  double delay_lhs = 0;           // delta r (kv + kp h)
  bool delay_bound = false;       // delay_lhs < 1

  bool ok() const noexcept {
    return kp_positive && ka_positive && nonsingular && damping && delay_bound;
  }
};

inline InternalVerdict check_internal(const PlatoonParams& p) {
  const auto& g = p.gains;
  const double r = static_cast<double>(p.r);
  InternalVerdict v;
  v.kp_positive = g.kp > 0.0;
  v.ka_positive = g.ka > 0.0;
  v.nonsingular_value = g.kp - p.tau * (g.kv + g.kp * p.h) + p.tau * p.tau * g.kp;
  v.nonsingular = std::abs(v.nonsingular_value) > kNonZeroBand;
  v.damping_lhs = g.kv + g.kp * p.h;
  v.damping_rhs = g.kp * p.tau;
  v.damping = v.damping_lhs >= v.damping_rhs;
  v.delay_lhs = p.delta * r * (g.kv + g.kp * p.h);
  v.delay_bound = v.delay_lhs < 1.0;
  return v;
}

// Left-hand values of the sufficient string stability region; each must be
// non-negative (the ones stated as "<= 0" are negated on evaluation).
struct StringVerdict {
  double headway_damping = 0;   // kv + kp (h - tau)                       >= 0
  double headway_delay = 0;     // -(2 tau delta - delta h - tau h)         >= 0
  double accel_gain = 0;        // -(ka - tau (kv + kp h))                  >= 0
  double delay_accel = 0;       // tau - 2 r ka delta                       >= 0
  double combined = 0;          // 1 + 2r(ka - tau(kv+kp h)) + 2r delta(kp(tau-h) - kv) >= 0
  std::vector<double> per_link; // l = 1..r: r^2kp^2h^2(1-(r-l)^2) + 2r^2 kp kv h(1+r-l) - 2r kp >= 0

  static constexpr std::size_t kScalarConditions = 5;

  std::array<double, kScalarConditions> scalar_values() const {
    return {headway_damping, headway_delay, accel_gain, delay_accel, combined};
  }

  bool ok() const noexcept {
    for (double x : scalar_values()) {
      if (!(x >= 0.0)) return false;
    }
    for (double x : per_link) {
      if (!(x >= 0.0)) return false;
    }
    return true;
  }
};

inline StringVerdict check_string_conditions(const PlatoonParams& p) {
  const auto& g = p.gains;
  const double r = static_cast<double>(p.r);
  const double tau = p.tau, h = p.h, dl = p.delta;
  StringVerdict s;
  s.headway_damping = g.kv + g.kp * (h - tau);
  s.headway_delay = -(2.0 * tau * dl - dl * h - tau * h);
  s.accel_gain = -(g.ka - tau * (g.kv + g.kp * h));
  s.delay_accel = tau - 2.0 * r * g.ka * dl;
  s.combined = 1.0 + 2.0 * r * (g.ka - tau * (g.kv + g.kp * h)) +
               2.0 * r * dl * (g.kp * (tau - h) - g.kv);
  s.per_link.reserve(p.r);
  for (std::size_t l = 1; l <= p.r; ++l) {
    const double rl = r - static_cast<double>(l);
    s.per_link.push_back(r * r * g.kp * g.kp * h * h * (1.0 - rl * rl) +
                         2.0 * r * r * g.kp * g.kv * h * (1.0 + rl) - 2.0 * r * g.kp);
  }
  return s;
}

// Smallest headway for which the string stability region is non-empty.
inline double min_headway(double tau, double delta, std::size_t r, double ka) {
  const double denom = 2.0 * static_cast<double>(r) * ka + 1.0;
  if (!(denom > 0.0)) throw InvalidArgument("min_headway: 2 r ka + 1 must be positive");
  return 2.0 * (tau + delta) / denom;
}

inline std::complex<double> transfer_function(const PlatoonParams& p, std::size_t l,
                                              double omega) {
  if (l < 1 || l > p.r) throw InvalidArgument("transfer_function: l must lie in 1..r");
  const auto& g = p.gains;
  const double r = static_cast<double>(p.r);
  const std::complex<double> s(0.0, omega);
  const std::complex<double> lag = std::exp(-p.delta * s);
  const auto num =
      lag * (g.ka * s * s + (g.kv - g.kp * p.h * (r - static_cast<double>(l))) * s + g.kp);
  const auto den =
      p.tau * s * s * s + s * s + r * lag * (g.ka * s * s + (g.kv + g.kp * p.h) * s + g.kp);
  return num / den;
}

inline double transfer_magnitude(const PlatoonParams& p, std::size_t l, double omega) {
  return std::abs(transfer_function(p, l, omega));
}

struct SweepGrid {
  double omega_min = 1e-3;
  double omega_max = 1e3;
  std::size_t points = 2000;
  bool include_zero = true;
};

// omega = 0 (optional) followed by `points` log-spaced values.
inline std::vector<double> log_grid(const SweepGrid& grid) {
  if (!(grid.omega_min > 0.0) || !(grid.omega_max > grid.omega_min) || grid.points < 2) {
    throw InvalidArgument("log_grid: need 0 < omega_min < omega_max and >= 2 points");
  }
  std::vector<double> out;
  out.reserve(grid.points + 1);
  if (grid.include_zero) out.push_back(0.0);
  const double lo = std::log10(grid.omega_min);
  const double hi = std::log10(grid.omega_max);
  for (std::size_t k = 0; k < grid.points; ++k) {
    const double x = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(grid.points - 1);
    out.push_back(std::pow(10.0, x));
  }
  out.back() = grid.omega_max;
  return out;
}

struct Peak {
  double value = 0.0;
  double omega = 0.0;
};

// Maximizes `f` over `omegas`, then refines around the best grid point by
// golden-section search on the bracketing interval.
template <class F>
Peak refine_peak(F&& f, const std::vector<double>& omegas, double tol = 1e-6) {
  if (omegas.empty()) throw InvalidArgument("refine_peak: empty grid");
  std::size_t best = 0;
  double best_val = f(omegas[0]);
  for (std::size_t k = 1; k < omegas.size(); ++k) {
    const double val = f(omegas[k]);
    if (val > best_val) {
      best_val = val;
      best = k;
    }
  }
  Peak peak{best_val, omegas[best]};
  if (omegas.size() < 2) return peak;

  double a = omegas[best == 0 ? 0 : best - 1];
  double b = omegas[best + 1 < omegas.size() ? best + 1 : best];
  constexpr double kInvPhi = 0.6180339887498949;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol * std::max(1.0, std::abs(peak.omega))) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  const double mid = 0.5 * (a + b);
  const double fmid = f(mid);
  if (fmid > peak.value) peak = {fmid, mid};
  return peak;
}

inline Peak hinf_peak(const PlatoonParams& p, std::size_t l, const SweepGrid& grid = {}) {
  if (l < 1 || l > p.r) throw InvalidArgument("hinf_norm: l must lie in 1..r");
  const auto omegas = log_grid(grid);
  return refine_peak([&](double w) { return transfer_magnitude(p, l, w); }, omegas);
}

inline double hinf_norm(const PlatoonParams& p, std::size_t l, const SweepGrid& grid = {}) {
  return hinf_peak(p, l, grid).value;
}

// Slack allowed when comparing a swept norm against the 1/r bound; the
// omega = 0 value equals 1/r up to rounding.
inline constexpr double kNormSlack = 1e-9;

struct StabilityReport {
  PlatoonParams params;
  InternalVerdict internal;
  StringVerdict string_conditions;
  double h_min = 0.0;
  bool headway_ok = false;            // h >= h_min
  std::vector<Peak> hinf;             // l = 1..r
  bool swept_ok = false;              // every hinf <= 1/r

  bool internal_ok() const noexcept { return internal.ok(); }
  // Sufficient certificate from the gain conditions; requires internal stability.
  bool string_ok() const noexcept {
    return internal_ok() && string_conditions.ok() && headway_ok;
  }
  bool certified() const noexcept { return string_ok() && swept_ok; }
};

inline StabilityReport analyze(const PlatoonParams& p, const SweepGrid& grid = {}) {
  if (auto v = p.violations(); !v.empty()) throw ValidationError(std::move(v));
  StabilityReport rep;
  rep.params = p;
  rep.internal = check_internal(p);
  rep.string_conditions = check_string_conditions(p);
  const double denom = 2.0 * static_cast<double>(p.r) * p.gains.ka + 1.0;
  rep.h_min = denom > 0.0 ? min_headway(p.tau, p.delta, p.r, p.gains.ka)
                          : std::numeric_limits<double>::infinity();
  rep.headway_ok = p.h >= rep.h_min;
  const double bound = 1.0 / static_cast<double>(p.r);
  rep.swept_ok = true;
  for (std::size_t l = 1; l <= p.r; ++l) {
    rep.hinf.push_back(hinf_peak(p, l, grid));
    if (!(rep.hinf.back().value <= bound + kNormSlack)) rep.swept_ok = false;
  }
  return rep;
}

struct FrequencyResponse {
  std::vector<double> omegas;
  std::vector<std::vector<double>> magnitudes;  // [l-1][k]
};

inline FrequencyResponse frequency_response(const PlatoonParams& p, const SweepGrid& grid = {}) {
  FrequencyResponse fr;
  fr.omegas = log_grid(grid);
  fr.magnitudes.resize(p.r);
  for (std::size_t l = 1; l <= p.r; ++l) {
    auto& row = fr.magnitudes[l - 1];
    row.reserve(fr.omegas.size());
    for (double w : fr.omegas) row.push_back(transfer_magnitude(p, l, w));
  }
  return fr;
}

// Gain-region sweep: the Cartesian product of per-parameter value lists.
// An empty list keeps the corresponding value from `fixed`.
struct RegionGrid {
  std::vector<double> tau, h, delta, kp, kv, ka;
  std::vector<std::size_t> r;
};

inline constexpr std::uint64_t kSweepBudget = 10'000'000;

struct RegionPoint {
  PlatoonParams params;
  bool internal_ok = false;
  bool conditions_ok = false;  // string region inequalities
  bool headway_ok = false;
  bool certified = false;      // internal && conditions && headway
  int swept_ok = -1;           // -1 not evaluated, else 0/1
};

inline std::uint64_t region_size(const RegionGrid& g) {
  std::uint64_t n = 1;
  auto mul = [&](std::size_t k) {
    const std::uint64_t f = k == 0 ? 1 : k;
    constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
    n = n > kMax / f ? kMax : n * f;
  };
  mul(g.tau.size());
  mul(g.h.size());
  mul(g.delta.size());
  mul(g.kp.size());
  mul(g.kv.size());
  mul(g.ka.size());
  mul(g.r.size());
  return n;
}

inline std::vector<RegionPoint> sweep_gain_region(const RegionGrid& grid, const PlatoonParams& fixed,
                                                  bool with_sweep = false,
                                                  const SweepGrid& freq = {}) {
  const auto total = region_size(grid);
  if (total > kSweepBudget) {
    throw InvalidArgument("sweep_gain_region: " + std::to_string(total) +
                          " points exceed the budget of " + std::to_string(kSweepBudget));
  }
  auto or_fixed = [](const std::vector<double>& v, double x) {
    return v.empty() ? std::vector<double>{x} : v;
  };
  const auto taus = or_fixed(grid.tau, fixed.tau);
  const auto hs = or_fixed(grid.h, fixed.h);
  const auto deltas = or_fixed(grid.delta, fixed.delta);
  const auto kps = or_fixed(grid.kp, fixed.gains.kp);
  const auto kvs = or_fixed(grid.kv, fixed.gains.kv);
  const auto kas = or_fixed(grid.ka, fixed.gains.ka);
  const auto rs = grid.r.empty() ? std::vector<std::size_t>{fixed.r} : grid.r;

  std::vector<RegionPoint> out;
  out.reserve(static_cast<std::size_t>(total));
  for (double tau : taus)
    for (double h : hs)
      for (double delta : deltas)
        for (std::size_t r : rs)
          for (double kp : kps)
            for (double kv : kvs)
              for (double ka : kas) {
                RegionPoint pt;
                pt.params = PlatoonParams{tau, h, delta, r, Gains{kp, kv, ka}};
                if (auto v = pt.params.violations(); !v.empty()) throw ValidationError(std::move(v));
                pt.internal_ok = check_internal(pt.params).ok();
                pt.conditions_ok = check_string_conditions(pt.params).ok();
                const double denom = 2.0 * static_cast<double>(r) * ka + 1.0;
                pt.headway_ok = denom > 0.0 && h >= min_headway(tau, delta, r, ka);
                pt.certified = pt.internal_ok && pt.conditions_ok && pt.headway_ok;
                if (with_sweep) {
                  bool ok = true;
                  const double bound = 1.0 / static_cast<double>(r);
                  for (std::size_t l = 1; l <= r && ok; ++l) {
                    ok = hinf_norm(pt.params, l, freq) <= bound + kNormSlack;
                  }
                  pt.swept_ok = ok ? 1 : 0;
                }
                out.push_back(pt);
              }
  return out;
}

}  // namespace platoon
