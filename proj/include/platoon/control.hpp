#pragma once

// Constant-time-headway spacing and the multiple-predecessor-following (MPF)
// linear feedback law with uniformly delayed state information.

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "platoon/dynamics.hpp"
#include "platoon/error.hpp"

namespace platoon {

struct SpacingPolicy {
  double h = 0.78;  // time headway [s]
  double d = 0.6;   // standstill distance [m]

  friend bool operator==(const SpacingPolicy&, const SpacingPolicy&) = default;
};

struct Gains {
  double kp = 0.1;   // [1/s^2]
  double kv = 0.61;  // [1/s]
  double ka = 0.41;  // [-]

  friend bool operator==(const Gains&, const Gains&) = default;
};

// Information flow: follower i (1-based) listens to min(i, r_max)
// immediate predecessors.
struct Topology {
  std::size_t n_followers = 3;
  std::size_t r_max = 2;

  std::size_t predecessors(std::size_t follower) const {
    if (follower == 0 || follower > n_followers) {
      throw InvalidArgument("Topology: follower index out of range");
    }
    return std::min(follower, r_max);
  }
};

// Delayed states available to follower i when computing its input: its own
// state and those of vehicles i-1, ..., i-r (in that order), all sampled at
// the same instant t - delta.
struct NeighborSnapshot {
  VehicleState own;
  std::vector<VehicleState> predecessors;
};

// Desired distance from vehicle i to vehicle i-l. `velocities` holds
// v_i, v_{i-1}, ..., v_{i-l+1}; its length determines l.
inline double desired_gap(const SpacingPolicy& policy, std::size_t l,
                          std::span<const double> velocities) {
  if (l == 0) throw InvalidArgument("desired_gap: predecessor offset must be >= 1");
  if (velocities.size() != l) {
    throw InvalidArgument("desired_gap: expected one velocity per spanned vehicle");
  }
  double gap = 0.0;
  for (double v : velocities) gap += policy.h * v + policy.d;
  return gap;
}

// Actual minus desired gap to the immediate predecessor.
constexpr double spacing_error(double p_pred, double p_own, double v_own,
                               const SpacingPolicy& policy) noexcept {
  return (p_pred - p_own) - (policy.h * v_own + policy.d);
}

inline double mpf_control(const Gains& gains, const SpacingPolicy& policy,
                          const NeighborSnapshot& snap) {
  const auto r = snap.predecessors.size();
  if (r == 0) throw InvalidArgument("mpf_control: snapshot has no predecessors");

  const VehicleState& own = snap.own;
  double u = 0.0;
  // Running desired gap; the l-th term adds h * v_{i-l+1} + d.
  double gap = 0.0;
  double spanned_v = own.v;
  for (std::size_t l = 1; l <= r; ++l) {
    const VehicleState& pred = snap.predecessors[l - 1];
    gap += policy.h * spanned_v + policy.d;
    u += gains.kp * (own.p - pred.p + gap) + gains.kv * (own.v - pred.v) +
         gains.ka * (own.a - pred.a);
    spanned_v = pred.v;
  }
  return -u;
}

}  // namespace platoon
