#pragma once

// Third-order longitudinal vehicle model:
//
//   p' = v
//   v' = a
//   tau * a' + a = u
//
// with the input held constant over each integration step.

#include <algorithm>
#include <cmath>

#include "platoon/error.hpp"

namespace platoon {

struct VehicleParams {
  double tau = 0.9;    // powertrain lag [s]
  double v_min = 0.0;  // velocity floor when clamping [m/s]

  friend bool operator==(const VehicleParams&, const VehicleParams&) = default;
};

struct VehicleState {
  double p = 0.0;  // [m]
  double v = 0.0;  // [m/s]
  double a = 0.0;  // [m/s^2]

  bool finite() const noexcept {
    return std::isfinite(p) && std::isfinite(v) && std::isfinite(a);
  }

  friend bool operator==(const VehicleState&, const VehicleState&) = default;
};

inline VehicleState operator+(const VehicleState& x, const VehicleState& y) {
  return {x.p + y.p, x.v + y.v, x.a + y.a};
}

inline VehicleState operator*(double k, const VehicleState& x) {
  return {k * x.p, k * x.v, k * x.a};
}

enum class Discretization {
  // Exact zero-order-hold solution of the full (p, v, a) system over the step.
  exact_hold,
  // Exact exponential update of a; trapezoidal rule for v and p.
  trapezoidal,
};

// Advances `state` by `dt` under constant input `u`.
//
// When `clamp` is set the velocity is floored at `params.v_min`; on a clamp
// event the acceleration may not stay negative.
inline VehicleState step_vehicle(const VehicleState& state, const VehicleParams& params,
                                 double u, double dt, bool clamp = false,
                                 Discretization scheme = Discretization::exact_hold) {
  if (!state.finite() || !std::isfinite(u) || !std::isfinite(dt) ||
      !std::isfinite(params.tau)) {
    throw InvalidState("step_vehicle: non-finite input");
  }
  if (dt <= 0.0) throw InvalidArgument("step_vehicle: dt must be positive");
  if (params.tau <= 0.0) throw InvalidArgument("step_vehicle: tau must be positive");

  const double tau = params.tau;
  // 1 - e^(-dt/tau), computed without cancellation for small dt/tau.
  const double decay_c = -std::expm1(-dt / tau);
  const double excess = state.a - u;

  VehicleState next;
  next.a = u + excess * (1.0 - decay_c);
  switch (scheme) {
    case Discretization::exact_hold:
      next.v = state.v + u * dt + excess * tau * decay_c;
      next.p = state.p + state.v * dt + 0.5 * u * dt * dt +
               excess * tau * (dt - tau * decay_c);
      break;
    case Discretization::trapezoidal:
      next.v = state.v + 0.5 * dt * (state.a + next.a);
      next.p = state.p + 0.5 * dt * (state.v + next.v);
      break;
  }

  if (clamp && next.v < params.v_min) {
    next.v = params.v_min;
    next.a = std::max(next.a, 0.0);
    next.p = std::max(next.p, state.p + params.v_min * dt);
  }
  return next;
}

// Equilibrium acceleration of the powertrain lag for a held input.
constexpr double steady_state_accel(double u) noexcept { return u; }

}  // namespace platoon
