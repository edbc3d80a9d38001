// Copyright 2026 ppfwalk contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Reduced-order pendulum model of bipedal walking: a point mass on massless
// telescopic legs, described by the horizontal CoM offset from the stance
// contact and the angular momentum about that contact. Horizontal axes are
// decoupled and share one scalar pendulum equation; L_y is the momentum
// conjugate to x_c (about the lateral axis) and L_x is the momentum conjugate
// to y_c, sign-mirrored so both axes read identically:
//
//   x_dot = L / (m z),   L_dot = m g x + u_a        (per axis)
//
// The model assumes constant CoM height (z == nominal, zdot == 0). The
// step-placement controller built on it is exact under that assumption, and
// mar_weight() quantifies confidence in it from the measured zdot.

#ifndef PPF_ALIP_HPP_
#define PPF_ALIP_HPP_

#include <array>
#include <cmath>
#include <stdexcept>

namespace ppf {

struct AlipParams {
  double mass = 1.0;             // kg (normalized; placement is m-invariant)
  double gravity = 9.81;         // m/s^2
  double nominal_height = 1.01;  // m
  double step_duration = 0.4;    // s
  double step_width = 0.3;       // m, lateral gait-width parameter

  // Never stored: always derived from gravity and nominal height.
  double omega() const { return std::sqrt(gravity / nominal_height); }

  void validate() const {
    if (!(mass > 0.0)) throw std::invalid_argument("alip: mass must be > 0");
    if (!(gravity > 0.0))
      throw std::invalid_argument("alip: gravity must be > 0");
    if (!(nominal_height > 0.0))
      throw std::invalid_argument("alip: nominal_height must be > 0");
    if (!(step_duration > 0.0))
      throw std::invalid_argument("alip: step_duration must be > 0");
    if (!(step_width >= 0.0))
      throw std::invalid_argument("alip: step_width must be >= 0");
  }
};

struct AlipState {
  double x_c = 0.0;   // m, sagittal CoM offset from stance contact
  double y_c = 0.0;   // m, lateral CoM offset from stance contact
  double L_x = 0.0;   // kg m^2/s, momentum conjugate to y_c
  double L_y = 0.0;   // kg m^2/s, momentum conjugate to x_c
  double z = 1.01;    // m, CoM height above stance contact
  double zdot = 0.0;  // m/s, vertical CoM velocity

  bool finite() const {
    return std::isfinite(x_c) && std::isfinite(y_c) && std::isfinite(L_x) &&
           std::isfinite(L_y) && std::isfinite(z) && std::isfinite(zdot);
  }
};

struct GaitCommand {
  double vx = 0.0;        // m/s, desired sagittal CoM velocity
  double vy = 0.0;        // m/s, desired lateral CoM velocity
  double yaw_rate = 0.0;  // rad/s, desired heading rate
};

// Step-level action: foot placement relative to the CoM (heading frame),
// height offset from the nominal pendulum length, and per-step yaw increment.
struct Action {
  double px = 0.0;    // m, sagittal placement
  double py = 0.0;    // m, lateral placement
  double dz = 0.0;    // m, height offset
  double dyaw = 0.0;  // rad, yaw increment executed at foot switch

  std::array<double, 4> to_array() const { return {px, py, dz, dyaw}; }
  static Action from_array(const std::array<double, 4>& a) {
    return Action{a[0], a[1], a[2], a[3]};
  }
};

struct MarConfig {
  double w0 = 5.0;       // regularization coefficient
  double delta = 0.0159; // m^2/s^2, smoothing parameter

  void validate() const {
    if (!(w0 >= 0.0)) throw std::invalid_argument("mar: w0 must be >= 0");
    if (!(delta > 0.0)) throw std::invalid_argument("mar: delta must be > 0");
  }
};

// Time derivative of (x_c, y_c, L_x, L_y) at the instantaneous height
// state.z (not the nominal one, so model mismatch is representable).
// u_a is the ankle torque, ordered (sagittal, lateral).
inline std::array<double, 4> alip_derivative(const AlipState& state,
                                             const std::array<double, 2>& u_a,
                                             const AlipParams& params) {
  params.validate();
  if (!state.finite() || !std::isfinite(u_a[0]) || !std::isfinite(u_a[1]))
    throw std::invalid_argument("alip_derivative: non-finite input");
  if (!(state.z > 0.0))
    throw std::invalid_argument("alip_derivative: z must be > 0");
  const double mz = params.mass * state.z;
  const double mg = params.mass * params.gravity;
  return {state.L_y / mz, state.L_x / mz, mg * state.y_c + u_a[1],
          mg * state.x_c + u_a[0]};
}

namespace detail {

// Unforced single-axis pendulum over time t at the nominal height:
//   x(t) = x0 cosh(wt) + L0/(m z w) sinh(wt)
//   L(t) = m z w x0 sinh(wt) + L0 cosh(wt)
inline void propagate_axis(double& x, double& L, double t,
                           const AlipParams& p) {
  const double w = p.omega();
  const double mzw = p.mass * p.nominal_height * w;
  const double c = std::cosh(w * t);
  const double s = std::sinh(w * t);
  const double x0 = x;
  const double L0 = L;
  x = x0 * c + L0 / mzw * s;
  L = mzw * x0 * s + L0 * c;
}

}  // namespace detail

// Closed-form propagation with zero ankle torque. Expects a state at the
// nominal height (z == nominal, zdot == 0); z and zdot pass through.
inline AlipState propagate_closed_form(const AlipState& state, double t,
                                       const AlipParams& params) {
  params.validate();
  if (!state.finite())
    throw std::invalid_argument("propagate_closed_form: non-finite state");
  if (!(t >= 0.0))
    throw std::invalid_argument("propagate_closed_form: t must be >= 0");
  AlipState out = state;
  detail::propagate_axis(out.x_c, out.L_y, t, params);
  detail::propagate_axis(out.y_c, out.L_x, t, params);
  return out;
}

// One-step-ahead foot placement relative to the CoM: placing the foot at the
// returned offset and propagating one step makes the end-of-step velocity
// L(T)/(m z) equal v_des exactly (under the model assumption).
inline double foot_placement(double L, double v_des, const AlipParams& params) {
  params.validate();
  if (!std::isfinite(L) || !std::isfinite(v_des))
    throw std::invalid_argument("foot_placement: non-finite input");
  const double w = params.omega();
  const double wT = w * params.step_duration;
  const double s = std::sinh(wT);
  if (s == 0.0)
    throw std::invalid_argument("foot_placement: step_duration too small");
  const double c = std::cosh(wT);
  const double mz = params.mass * params.nominal_height;
  return (L * c / mz - v_des) / (w * s);
}

// Lateral end-of-step velocity target producing a period-2 lateral orbit at
// zero lateral command. The orbit magnitude comes from the symmetric-crossing
// condition y(T) = -y(0), v(T) = v(0) with boundary offset W/2, which gives
// |v| = (W/2) w coth(wT/2); the sign alternates with the stance leg. See
// docs/model.md for the derivation and the shape of the induced orbit.
inline double lateral_velocity_target(int stance_sign, const GaitCommand& cmd,
                                      const AlipParams& params) {
  params.validate();
  if (stance_sign != 1 && stance_sign != -1)
    throw std::invalid_argument("lateral_velocity_target: stance_sign not ±1");
  const double w = params.omega();
  const double half = 0.5 * w * params.step_duration;
  const double v_orbit =
      0.5 * params.step_width * w * (std::cosh(half) / std::sinh(half));
  return cmd.vy + static_cast<double>(stance_sign) * v_orbit;
}

// Model-based step controller: one-step-ahead placement per axis, no height
// offset, and a yaw increment that realizes the commanded heading rate.
inline Action expert_action(const AlipState& state, int stance_sign,
                            const GaitCommand& cmd, const AlipParams& params) {
  Action a;
  a.px = foot_placement(state.L_y, cmd.vx, params);
  a.py = foot_placement(state.L_x, lateral_velocity_target(stance_sign, cmd, params),
                        params);
  a.dz = 0.0;
  a.dyaw = cmd.yaw_rate * params.step_duration;
  return a;
}

// Confidence weight for expert supervision: w0 at zero vertical velocity,
// smoothly decaying as the constant-height assumption is violated.
inline double mar_weight(double zdot, const MarConfig& cfg) {
  cfg.validate();
  return cfg.w0 * std::exp(-(zdot * zdot) / cfg.delta);
}

}  // namespace ppf

#endif  // PPF_ALIP_HPP_
