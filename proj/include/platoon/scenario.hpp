#pragma once

// Closed-loop platoon experiment: an open-loop leader followed by MPF
// controlled followers, coupled through delayed V2V channels.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "platoon/comms.hpp"
#include "platoon/control.hpp"
#include "platoon/dynamics.hpp"
#include "platoon/error.hpp"
#include "platoon/stability.hpp"

namespace platoon {

// Leader acceleration command: zero, then a step, a negative half-sine
// disturbance on top of the step, and finally constant braking.
struct LeaderProfile {
  double a_step = 0.1;    // [m/s^2]
  double t_step = 5.0;    // [s]
  double a_dist = 0.25;   // disturbance amplitude [m/s^2]
  double omega_0 = std::numbers::pi;  // disturbance frequency [rad/s]
  double t_dist = 15.0;   // [s]
  double a_brake = -0.2;  // [m/s^2]
  double t_brake = 40.0;  // [s]
  // Optional end of the step acceleration (leader cruises at constant speed
  // afterwards). Infinite keeps the step active until braking.
  double t_cruise = std::numeric_limits<double>::infinity();
  // Alternate throttle amplitude kept alongside a_step for reference runs;
  // not applied by the runner.
  double a0 = 0.05;

  double disturbance_end() const { return t_dist + std::numbers::pi / omega_0; }

  friend bool operator==(const LeaderProfile&, const LeaderProfile&) = default;
};

// Phase boundaries are compared with this slack so that t = k * dt lands on
// the intended side of an event time despite rounding in k * dt.
inline constexpr double kEventSlack = 1e-9;

inline double leader_input(const LeaderProfile& lp, double t) {
  auto reached = [t](double event) { return t >= event - kEventSlack; };
  if (reached(lp.t_brake)) return lp.a_brake;
  if (!reached(lp.t_step)) return 0.0;
  double u = reached(lp.t_cruise) ? 0.0 : lp.a_step;
  if (reached(lp.t_dist) && !reached(lp.disturbance_end())) {
    u += lp.a_dist * std::sin(lp.omega_0 * (t - lp.t_dist) + std::numbers::pi);
  }
  return u;
}

// How the sampled inputs are applied across one step. zero_order holds the
// value computed at the step start; step_average applies the mean of the
// law at both step ends (the leader is sampled at the midpoint), removing
// the half-step lag of a plain hold.
enum class InputHold { zero_order, step_average };

struct ScenarioConfig {
  std::size_t n_followers = 3;
  std::size_t r_max = 2;
  VehicleParams vehicle{};
  SpacingPolicy policy{};
  Gains gains{};
  ChannelParams channel{};
  LeaderProfile leader{};
  double dt = 0.01;
  double t_end = 60.0;
  bool clamp = true;
  Discretization integrator = Discretization::exact_hold;
  InputHold input_hold = InputHold::step_average;

  Topology topology() const { return {n_followers, r_max}; }

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;

  PlatoonParams platoon_params() const {
    return PlatoonParams{vehicle.tau, policy.h, channel.delta, r_max, gains};
  }

  std::vector<std::string> violations() const {
    std::vector<std::string> out;
    auto finite = [&](double x, const char* name) {
      if (!std::isfinite(x)) out.push_back(std::string(name) + " must be finite");
      return std::isfinite(x);
    };
    auto multiple = [&](double x, const char* name) {
      if (!(dt > 0.0) || !std::isfinite(x)) return;
      try {
        (void)to_steps(x, dt, name);
      } catch (const InvalidArgument&) {
        out.push_back(std::string(name) + " must be an integer multiple of dt");
      }
    };

    if (n_followers > 0 && r_max < 1) out.emplace_back("r_max must be >= 1");
    if (finite(vehicle.tau, "vehicle.tau") && !(vehicle.tau > 0.0)) {
      out.emplace_back("vehicle.tau must be > 0");
    }
    finite(vehicle.v_min, "vehicle.v_min");
    if (finite(policy.h, "policy.h") && policy.h < 0.0) out.emplace_back("policy.h must be >= 0");
    if (finite(policy.d, "policy.d") && !(policy.d > 0.0)) out.emplace_back("policy.d must be > 0");
    finite(gains.kp, "gains.kp");
    finite(gains.kv, "gains.kv");
    finite(gains.ka, "gains.ka");
    if (finite(dt, "dt") && !(dt > 0.0)) out.emplace_back("dt must be > 0");
    if (finite(channel.delta, "channel.delta")) {
      if (channel.delta < 0.0) out.emplace_back("channel.delta must be >= 0");
      else multiple(channel.delta, "channel.delta");
    }
    if (!(channel.loss_prob >= 0.0 && channel.loss_prob <= 1.0)) {
      out.emplace_back("channel.loss_prob must lie in [0, 1]");
    }
    const auto& lp = leader;
    finite(lp.a_step, "leader.a_step");
    finite(lp.a_dist, "leader.a_dist");
    finite(lp.a_brake, "leader.a_brake");
    finite(lp.a0, "leader.a0");
    if (finite(lp.omega_0, "leader.omega_0") && !(lp.omega_0 > 0.0)) {
      out.emplace_back("leader.omega_0 must be > 0");
    }
    if (finite(lp.t_step, "leader.t_step") && finite(lp.t_dist, "leader.t_dist") &&
        finite(lp.t_brake, "leader.t_brake")) {
      if (!(lp.t_step < lp.t_dist && lp.t_dist < lp.t_brake)) {
        out.emplace_back("leader events must satisfy t_step < t_dist < t_brake");
      }
      if (lp.t_step < 0.0) out.emplace_back("leader.t_step must be >= 0");
      if (finite(t_end, "t_end")) {
        if (!(t_end > lp.t_brake)) out.emplace_back("t_end must exceed leader.t_brake");
        multiple(t_end, "t_end");
      }
    }
    if (std::isnan(lp.t_cruise)) out.emplace_back("leader.t_cruise must not be NaN");
    return out;
  }

  void validate() const {
    if (auto v = violations(); !v.empty()) throw ValidationError(std::move(v));
  }
};

struct VehicleSample {
  double p = 0.0;
  double v = 0.0;
  double a = 0.0;
  double u = 0.0;
  double e = 0.0;  // spacing error to the immediate predecessor; 0 for the leader

  friend bool operator==(const VehicleSample&, const VehicleSample&) = default;
};

// Row-major time series: one row per step, one sample per vehicle.
class TrajectoryLog {
 public:
  explicit TrajectoryLog(std::size_t vehicles = 0) : vehicles_(vehicles) {}

  std::size_t vehicles() const noexcept { return vehicles_; }
  std::size_t rows() const noexcept { return t_.size(); }
  bool empty() const noexcept { return t_.empty(); }

  double t(std::size_t row) const { return t_.at(row); }
  std::span<const VehicleSample> row(std::size_t k) const {
    return {samples_.data() + k * vehicles_, vehicles_};
  }
  const VehicleSample& at(std::size_t row, std::size_t vehicle) const {
    return samples_.at(row * vehicles_ + vehicle);
  }

  void reserve(std::size_t rows) {
    t_.reserve(rows);
    samples_.reserve(rows * vehicles_);
  }

  void append(double t, std::span<const VehicleSample> row) {
    if (row.size() != vehicles_) throw InvalidArgument("TrajectoryLog: row width mismatch");
    t_.push_back(t);
    samples_.insert(samples_.end(), row.begin(), row.end());
  }

  friend bool operator==(const TrajectoryLog&, const TrajectoryLog&) = default;

 private:
  std::size_t vehicles_;
  std::vector<double> t_;
  std::vector<VehicleSample> samples_;
};

// Vehicle states plus, for each follower i, its inbound links:
// links[i][0] carries its own state, links[i][l] the state of vehicle i - l.
struct PlatoonState {
  std::vector<VehicleState> vehicles;
  std::vector<std::vector<DelayedChannel>> links;
};

inline PlatoonState init_platoon(const ScenarioConfig& cfg) {
  cfg.validate();
  PlatoonState ps;
  ps.vehicles.reserve(cfg.n_followers + 1);
  for (std::size_t i = 0; i <= cfg.n_followers; ++i) {
    ps.vehicles.push_back({-static_cast<double>(i) * cfg.policy.d, 0.0, 0.0});
  }
  const auto topo = cfg.topology();
  ps.links.resize(cfg.n_followers + 1);
  for (std::size_t i = 1; i <= cfg.n_followers; ++i) {
    const std::size_t r = topo.predecessors(i);
    auto& in = ps.links[i];
    in.reserve(r + 1);
    for (std::size_t l = 0; l <= r; ++l) {
      in.emplace_back(cfg.channel, cfg.dt, ps.vehicles[i - l], i - l, i);
    }
  }
  return ps;
}

// Called as observer(step, follower, snapshot) before each follower's input
// is computed.
struct NoObserver {
  void operator()(std::size_t, std::size_t, const NeighborSnapshot&) const noexcept {}
};

template <class Observer = NoObserver>
TrajectoryLog run(const ScenarioConfig& cfg, Observer&& observer = {}) {
  PlatoonState ps = init_platoon(cfg);
  const std::size_t n = ps.vehicles.size();
  const auto steps = static_cast<std::size_t>(to_steps(cfg.t_end, cfg.dt, "t_end"));

  TrajectoryLog log(n);
  log.reserve(steps + 1);
  std::vector<double> u(n, 0.0), applied(n, 0.0);
  std::vector<VehicleSample> row(n);
  NeighborSnapshot snap, ahead;
  // Averaging needs the next snapshot, which exists only when the delay
  // spans at least one step.
  const bool average = cfg.input_hold == InputHold::step_average;
  const bool look_ahead = average && to_steps(cfg.channel.delta, cfg.dt, "delta") >= 1;

  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * cfg.dt;

    for (std::size_t i = 1; i < n; ++i) {
      auto& in = ps.links[i];
      for (std::size_t l = 0; l < in.size(); ++l) in[l].publish(t, ps.vehicles[i - l]);
    }

    u[0] = leader_input(cfg.leader, t);
    applied[0] = average ? leader_input(cfg.leader, t + 0.5 * cfg.dt) : u[0];
    for (std::size_t i = 1; i < n; ++i) {
      const auto& in = ps.links[i];
      snap.own = in[0].sample_delayed(t);
      snap.predecessors.clear();
      for (std::size_t l = 1; l < in.size(); ++l) snap.predecessors.push_back(in[l].sample_delayed(t));
      observer(k, i, static_cast<const NeighborSnapshot&>(snap));
      u[i] = mpf_control(cfg.gains, cfg.policy, snap);
      applied[i] = u[i];
      if (look_ahead) {
        const double next_t = t + cfg.dt;
        ahead.own = in[0].sample_delayed(next_t);
        ahead.predecessors.clear();
        for (std::size_t l = 1; l < in.size(); ++l) ahead.predecessors.push_back(in[l].sample_delayed(next_t));
        applied[i] = 0.5 * (u[i] + mpf_control(cfg.gains, cfg.policy, ahead));
      }
    }

    for (std::size_t i = 0; i < n; ++i) {
      const auto& s = ps.vehicles[i];
      row[i] = {s.p, s.v, s.a, u[i],
                i == 0 ? 0.0 : spacing_error(ps.vehicles[i - 1].p, s.p, s.v, cfg.policy)};
    }
    log.append(t, row);
    if (k == steps) break;

    const bool leader_braking = t >= cfg.leader.t_brake - kEventSlack;
    for (std::size_t i = 0; i < n; ++i) {
      const bool clamp = cfg.clamp || (i == 0 && leader_braking);
      VehicleState next;
      try {
        next = step_vehicle(ps.vehicles[i], cfg.vehicle, applied[i], cfg.dt, clamp, cfg.integrator);
      } catch (const InvalidState&) {
        throw DivergenceError(k, i, t);
      }
      if (!next.finite()) throw DivergenceError(k + 1, i, t + cfg.dt);
      ps.vehicles[i] = next;
    }
  }
  return log;
}

struct FollowerMetrics {
  double peak_abs_error = 0.0;
  double peak_time = 0.0;
  double rms_error = 0.0;
  double final_error = 0.0;
  double window_peak = 0.0;  // peak |e| inside the analysis window
};

struct Metrics {
  double window_start = 0.0;
  double window_end = 0.0;
  std::vector<FollowerMetrics> followers;  // followers[0] is vehicle 1
  // window_peak(i + 1) / window_peak(i) for consecutive followers.
  std::vector<double> peak_ratios;
};

inline Metrics metrics(const TrajectoryLog& log, double window_start, double window_end) {
  if (log.empty()) throw InvalidArgument("metrics: empty log");
  Metrics m;
  m.window_start = window_start;
  m.window_end = window_end;
  const std::size_t nf = log.vehicles() > 0 ? log.vehicles() - 1 : 0;
  m.followers.resize(nf);
  for (std::size_t f = 0; f < nf; ++f) {
    auto& fm = m.followers[f];
    double sum_sq = 0.0;
    for (std::size_t k = 0; k < log.rows(); ++k) {
      const double e = log.at(k, f + 1).e;
      const double t = log.t(k);
      sum_sq += e * e;
      if (std::abs(e) > fm.peak_abs_error) {
        fm.peak_abs_error = std::abs(e);
        fm.peak_time = t;
      }
      if (t >= window_start - kEventSlack && t < window_end - kEventSlack) {
        fm.window_peak = std::max(fm.window_peak, std::abs(e));
      }
    }
    fm.rms_error = std::sqrt(sum_sq / static_cast<double>(log.rows()));
    fm.final_error = log.at(log.rows() - 1, f + 1).e;
  }
  for (std::size_t f = 0; f + 1 < nf; ++f) {
    const double lo = m.followers[f].window_peak;
    const double hi = m.followers[f + 1].window_peak;
    m.peak_ratios.push_back(lo > 0.0   ? hi / lo
                            : hi > 0.0 ? std::numeric_limits<double>::infinity()
                                       : 0.0);
  }
  return m;
}

// Uses the disturbance window [t_dist, t_brake) of the profile.
inline Metrics metrics(const TrajectoryLog& log, const LeaderProfile& lp) {
  return metrics(log, lp.t_dist, lp.t_brake);
}

}  // namespace platoon
