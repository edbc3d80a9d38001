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

// Hybrid stepping simulator around the reduced-order pendulum. Horizontal
// dynamics integrate the pendulum equations with the instantaneous height
// above the stance contact, and the height itself is an explicit PD-regulated
// telescopic-leg axis, so constant-height violations arise physically from
// terrain changes and aggressive commands. Foot switches are discrete resets
// at the end of each step phase.

#ifndef PPF_ENV_HPP_
#define PPF_ENV_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <stdexcept>
#include <string>
#include <vector>

#include "ppf/alip.hpp"
#include "ppf/csv.hpp"
#include "ppf/rng.hpp"
#include "ppf/terrain.hpp"

namespace ppf {

struct RewardConfig {
  double w_lin = 1.2;
  double w_ang = 1.1;
  double w_torque = -4e-6;
  double w_zvel = -0.6;
  double delta_xy = 0.25;
  double delta_omega = 0.25;
};

struct RandomizationConfig {
  double mass_scale_lo = 0.8, mass_scale_hi = 1.2;
  double gain_scale_lo = 0.8, gain_scale_hi = 1.2;
  double action_lag_max = 0.030;  // s, first-order lag time constant
  double push_rate = 0.05;        // expected pushes per second
  double push_vel_max = 0.5;      // m/s lateral velocity change per push

  void disable() {
    mass_scale_lo = mass_scale_hi = 1.0;
    gain_scale_lo = gain_scale_hi = 1.0;
    action_lag_max = 0.0;
    push_rate = 0.0;
  }
};

struct EnvConfig {
  AlipParams alip;
  MarConfig mar;

  double control_dt = 0.01;
  double physics_dt = 0.001;
  double episode_length = 20.0;  // s

  double kp_height = 100.0;  // 1/s^2
  double kd_height = 20.0;   // 1/s
  double max_uz_factor = 4.0;  // vertical force clamp, multiple of weight

  double max_leg_length = 1.16;
  double fall_xy_limit = 1.0;
  double min_height = 0.5;

  // Action box limits (placement m, height m, yaw rad).
  double clamp_px = 0.5, clamp_py = 0.8, clamp_dz = 0.2, clamp_dyaw = 0.5;

  // Command sampling ranges (forward range is curriculum-driven).
  double cmd_vx_init = 0.4;  // initial forward-command upper bound
  double cmd_vx_cap = 1.0;   // curriculum ceiling
  double cmd_vy_range = 0.2;
  double cmd_yaw_range = 0.3;

  RandomizationConfig rand;
  double obs_noise_vel = 0.005;
  double obs_noise_pos = 0.002;
  int history_len = 4;

  RewardConfig reward;

  int obs_dim() const { return 17 + 4 * history_len; }
  int ticks_per_step() const {
    return static_cast<int>(std::llround(alip.step_duration / control_dt));
  }
  int episode_ticks() const {
    return static_cast<int>(std::llround(episode_length / control_dt));
  }
  int physics_substeps() const {
    return static_cast<int>(std::llround(control_dt / physics_dt));
  }

  void validate() const {
    alip.validate();
    mar.validate();
    if (!(control_dt > 0.0) || !(physics_dt > 0.0))
      throw std::invalid_argument("env: time steps must be > 0");
    const double sub = control_dt / physics_dt;
    if (std::abs(sub - std::llround(sub)) > 1e-9)
      throw std::invalid_argument("env: physics_dt must divide control_dt");
    const double tps = alip.step_duration / control_dt;
    if (std::abs(tps - std::llround(tps)) > 1e-9)
      throw std::invalid_argument("env: control_dt must divide step_duration");
    if (!(episode_length > 0.0))
      throw std::invalid_argument("env: episode_length must be > 0");
    if (!(reward.delta_xy > 0.0) || !(reward.delta_omega > 0.0))
      throw std::invalid_argument("env: reward temperatures must be > 0");
    if (!(max_leg_length > alip.nominal_height))
      throw std::invalid_argument("env: max_leg_length below nominal height");
    if (history_len < 0)
      throw std::invalid_argument("env: history_len must be >= 0");
  }

  EnvConfig nominal() const {
    EnvConfig c = *this;
    c.rand.disable();
    c.obs_noise_vel = 0.0;
    c.obs_noise_pos = 0.0;
    return c;
  }
};

// Per-episode physics perturbation.
struct DynamicsDraw {
  double mass_scale = 1.0;
  double gain_scale = 1.0;
  double action_lag = 0.0;  // s
  std::vector<std::pair<int, double>> pushes;  // (tick, lateral dv)
};

inline DynamicsDraw randomize_dynamics(uint64_t seed, const EnvConfig& cfg) {
  Rng rng(seed);
  DynamicsDraw d;
  d.mass_scale = rng.uniform(cfg.rand.mass_scale_lo, cfg.rand.mass_scale_hi);
  d.gain_scale = rng.uniform(cfg.rand.gain_scale_lo, cfg.rand.gain_scale_hi);
  d.action_lag = rng.uniform(0.0, cfg.rand.action_lag_max);
  const double p_tick = cfg.rand.push_rate * cfg.control_dt;
  if (p_tick > 0.0) {
    for (int t = 0; t < cfg.episode_ticks(); ++t) {
      if (rng.bernoulli(p_tick))
        d.pushes.emplace_back(
            t, rng.uniform(-cfg.rand.push_vel_max, cfg.rand.push_vel_max));
    }
  }
  return d;
}

enum class DoneReason { none, fell, height_collapse, timeout };

inline const char* to_string(DoneReason r) {
  switch (r) {
    case DoneReason::none: return "none";
    case DoneReason::fell: return "fell";
    case DoneReason::height_collapse: return "height_collapse";
    case DoneReason::timeout: return "timeout";
  }
  return "?";
}

struct SimState {
  AlipState alip;          // pendulum state, heading frame, z is world height
  double x_w = 0.0;        // world CoM position
  double y_w = 0.0;
  double yaw = 0.0;
  int stance_sign = +1;
  int tick_in_step = 0;    // phase = tick_in_step / ticks_per_step
  double phase = 0.0;
  Action swing_target;     // lag-filtered action currently applied
  Action prev_action;      // last commanded action after box clamping
  double h_s = 0.0;        // terrain height under the stance contact
  int tick = 0;
  // Derived signals.
  double v_inst_x = 0.0, v_inst_y = 0.0;  // heading frame, instantaneous
  double yaw_rate_real = 0.0;             // executed per-step yaw rate
};

struct StepInfo {
  double zdot = 0.0;
  Action expert;
  double mar_w = 0.0;
  double v_real_x = 0.0, v_real_y = 0.0;  // step-window average, heading frame
  double yaw_rate_real = 0.0;
  double terrain_level = 0.0;
  double mass_scale = 1.0, gain_scale = 1.0, action_lag = 0.0;
};

struct Transition {
  std::vector<double> observation;
  double reward = 0.0;
  double lin_term = 0.0, ang_term = 0.0, torque_term = 0.0, zvel_term = 0.0;
  bool done = false;
  DoneReason reason = DoneReason::none;
  StepInfo info;
};

struct RewardTerms {
  double lin = 0.0, ang = 0.0, torque = 0.0, zvel = 0.0;
  double total() const { return lin + ang + torque + zvel; }
};

// Tracking rewards peak at their weights on exact tracking; effort and
// vertical motion are penalized quadratically.
inline RewardTerms compute_reward_terms(double v_real_x, double v_real_y,
                                        double yaw_rate_real,
                                        const GaitCommand& cmd,
                                        double u_sq_mean, double zdot,
                                        const RewardConfig& rw) {
  RewardTerms t;
  const double ex = v_real_x - cmd.vx;
  const double ey = v_real_y - cmd.vy;
  const double ew = yaw_rate_real - cmd.yaw_rate;
  t.lin = rw.w_lin * std::exp(-(ex * ex + ey * ey) / rw.delta_xy);
  t.ang = rw.w_ang * std::exp(-(ew * ew) / rw.delta_omega);
  t.torque = rw.w_torque * u_sq_mean;
  t.zvel = rw.w_zvel * zdot * zdot;
  return t;
}

struct EpisodeStats {
  double sum_lin_term = 0.0;
  double sum_ang_term = 0.0;
  double sum_reward = 0.0;
  int ticks = 0;
  double distance = 0.0;  // world displacement magnitude
  DoneReason reason = DoneReason::none;

  bool success() const { return reason == DoneReason::timeout; }
  double mean_lin_term() const {
    return ticks > 0 ? sum_lin_term / ticks : 0.0;
  }
};

struct CurriculumState {
  double terrain_level = 0.0;
  double vx_cap = 0.4;
};

// Terrain level moves 0.1 per episode: up on survival, down on a fall.
// The forward-command cap opens 0.1 m/s when linear tracking is strong.
inline CurriculumState update_curriculum(const EpisodeStats& stats,
                                         const CurriculumState& cur,
                                         const EnvConfig& cfg) {
  CurriculumState next = cur;
  if (stats.success())
    next.terrain_level = std::min(1.0, cur.terrain_level + 0.1);
  else
    next.terrain_level = std::max(0.0, cur.terrain_level - 0.1);
  if (stats.mean_lin_term() > 0.8 * cfg.reward.w_lin)
    next.vx_cap = std::min(cfg.cmd_vx_cap, cur.vx_cap + 0.1);
  return next;
}

// Observation layout (fixed order, heading frame):
//   [0]  v_x   [1] v_y   [2] zdot   [3] realized yaw rate
//   [4]  sin(2*pi*phase)   [5] cos(2*pi*phase)   [6] stance_sign
//   [7]  x_c   [8] y_c   [9] height error (z - h_s - nominal)
//   [10..12] command (vx, vy, yaw rate)
//   [13..16] previous action
//   [17..]   history of (x_c, y_c, v_x, v_y), most recent first
// Additive zero-mean Gaussian noise on measured channels; the history stores
// the noisy measurements.
inline std::vector<double> build_observation(
    const SimState& sim, const GaitCommand& cmd,
    const std::deque<std::array<double, 4>>& history,
    const std::array<double, 7>& noise, const EnvConfig& cfg) {
  std::vector<double> obs;
  obs.reserve(cfg.obs_dim());
  const double nv = cfg.obs_noise_vel;
  const double np = cfg.obs_noise_pos;
  obs.push_back(sim.v_inst_x + nv * noise[0]);
  obs.push_back(sim.v_inst_y + nv * noise[1]);
  obs.push_back(sim.alip.zdot + nv * noise[2]);
  obs.push_back(sim.yaw_rate_real + nv * noise[3]);
  obs.push_back(std::sin(2.0 * M_PI * sim.phase));
  obs.push_back(std::cos(2.0 * M_PI * sim.phase));
  obs.push_back(static_cast<double>(sim.stance_sign));
  obs.push_back(sim.alip.x_c + np * noise[4]);
  obs.push_back(sim.alip.y_c + np * noise[5]);
  obs.push_back(sim.alip.z - sim.h_s - cfg.alip.nominal_height +
                np * noise[6]);
  obs.push_back(cmd.vx);
  obs.push_back(cmd.vy);
  obs.push_back(cmd.yaw_rate);
  obs.push_back(sim.prev_action.px);
  obs.push_back(sim.prev_action.py);
  obs.push_back(sim.prev_action.dz);
  obs.push_back(sim.prev_action.dyaw);
  for (int i = 0; i < cfg.history_len; ++i) {
    if (i < static_cast<int>(history.size())) {
      for (double v : history[i]) obs.push_back(v);
    } else {
      for (int k = 0; k < 4; ++k) obs.push_back(0.0);
    }
  }
  return obs;
}

struct TrajPoint {
  int tick = 0;
  double t = 0.0;
  double x_w = 0.0, y_w = 0.0, z = 0.0, zdot = 0.0;
  double vx = 0.0, vy = 0.0;  // step-window realized, heading frame
  double psi = 0.0, phase = 0.0;
  int stance = 0;
  double reward = 0.0, w_mar = 0.0;
  DoneReason reason = DoneReason::none;
};

inline void write_trajectory_csv(const std::string& path,
                                 const std::vector<TrajPoint>& traj) {
  CsvWriter csv(path, {"tick", "t", "x_w", "y_w", "z", "zdot", "vx", "vy",
                       "psi", "phase", "stance", "reward", "w_mar",
                       "done_reason"});
  for (size_t i = 0; i < traj.size(); ++i) {
    const TrajPoint& p = traj[i];
    const bool last = (i + 1 == traj.size());
    csv.row({cell(p.tick), cell(p.t), cell(p.x_w), cell(p.y_w), cell(p.z),
             cell(p.zdot), cell(p.vx), cell(p.vy), cell(p.psi), cell(p.phase),
             cell(p.stance), cell(p.reward), cell(p.w_mar),
             last && p.reason != DoneReason::none ? to_string(p.reason) : ""});
  }
}

class BipedEnv {
 public:
  explicit BipedEnv(const EnvConfig& cfg) : cfg_(cfg), rng_(0) {
    cfg_.validate();
  }

  const EnvConfig& config() const { return cfg_; }
  const SimState& sim() const { return sim_; }
  const DynamicsDraw& draw() const { return draw_; }
  const GaitCommand& command() const { return cmd_; }
  const EpisodeStats& stats() const { return stats_; }
  bool done() const { return done_; }

  void set_record(bool on) { record_ = on; }
  const std::vector<TrajPoint>& trajectory() const { return traj_; }

  Transition reset(uint64_t seed, const TerrainMap& terrain,
                   const GaitCommand& cmd) {
    rng_ = Rng(derive_seed(seed, 0xe9));
    draw_ = randomize_dynamics(derive_seed(seed, 0x0d), cfg_);
    terrain_ = terrain;
    cmd_ = cmd;
    sim_ = SimState{};
    sim_.h_s = terrain_.height(0.0, 0.0);
    sim_.alip.z = sim_.h_s + cfg_.alip.nominal_height;
    stance_x_ = 0.0;
    stance_y_ = 0.0;
    done_ = false;
    reason_ = DoneReason::none;
    stats_ = EpisodeStats{};
    history_.clear();
    v_real_x_ = 0.0;
    v_real_y_ = 0.0;
    step_start_x_ = 0.0;
    step_start_y_ = 0.0;
    steps_completed_ = 0;
    traj_.clear();
    push_idx_ = 0;

    Transition tr;
    tr.observation = observe();
    push_history();
    fill_info(tr.info);
    if (record_) record_point(tr);
    return tr;
  }

  Transition step(const Action& action) {
    if (done_) throw std::logic_error("step() on a finished episode");

    // Box-clamp the commanded action, then apply first-order lag.
    Action cmd_act = clamp_action(action);
    sim_.prev_action = cmd_act;
    const double lag_gain =
        cfg_.control_dt / (draw_.action_lag + cfg_.control_dt);
    sim_.swing_target.px += lag_gain * (cmd_act.px - sim_.swing_target.px);
    sim_.swing_target.py += lag_gain * (cmd_act.py - sim_.swing_target.py);
    sim_.swing_target.dz += lag_gain * (cmd_act.dz - sim_.swing_target.dz);
    sim_.swing_target.dyaw +=
        lag_gain * (cmd_act.dyaw - sim_.swing_target.dyaw);

    // Scheduled lateral push impulses.
    while (push_idx_ < draw_.pushes.size() &&
           draw_.pushes[push_idx_].first == sim_.tick) {
      const double dv = draw_.pushes[push_idx_].second;
      sim_.alip.L_x += m_ep() * z_rel() * dv;
      ++push_idx_;
    }

    const double u_sq_mean = integrate_control_tick();

    ++sim_.tick;
    ++sim_.tick_in_step;
    if (sim_.tick_in_step >= cfg_.ticks_per_step()) {
      // Realized planar velocity, updated once per step and held between
      // switches (like the realized yaw rate). Sagittal: the step-boundary
      // velocity, which the one-step-ahead placement law regulates.
      // Lateral: net CoM drift over the step, which is zero for any
      // periodic gait and so measures commanded drift rather than sway.
      refresh_velocity();
      if (steps_completed_ > 0) {  // the first half cycle is not a stride
        const double T = cfg_.alip.step_duration;
        const double dx = sim_.x_w - step_start_x_;
        const double dy = sim_.y_w - step_start_y_;
        v_real_x_ = sim_.v_inst_x;
        v_real_y_ = (-std::sin(sim_.yaw) * dx + std::cos(sim_.yaw) * dy) / T;
      }
      ++steps_completed_;
      step_start_x_ = sim_.x_w;
      step_start_y_ = sim_.y_w;
      execute_foot_switch();
    }
    sim_.phase =
        static_cast<double>(sim_.tick_in_step) / cfg_.ticks_per_step();
    refresh_velocity();

    Transition tr;
    compute_reward(u_sq_mean, tr);
    check_termination();
    tr.done = done_;
    tr.reason = reason_;
    tr.observation = observe();
    push_history();
    fill_info(tr.info);

    stats_.sum_lin_term += tr.lin_term;
    stats_.sum_ang_term += tr.ang_term;
    stats_.sum_reward += tr.reward;
    stats_.ticks += 1;
    stats_.distance = std::hypot(sim_.x_w, sim_.y_w);
    stats_.reason = reason_;

    if (record_) record_point(tr);
    return tr;
  }

 private:
  double m_ep() const { return draw_.mass_scale * cfg_.alip.mass; }
  double z_rel() const { return std::max(sim_.alip.z - sim_.h_s, 0.05); }

  Action clamp_action(const Action& a) const {
    auto clamp = [](double v, double lim) {
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite action");
      return std::clamp(v, -lim, lim);
    };
    return Action{clamp(a.px, cfg_.clamp_px), clamp(a.py, cfg_.clamp_py),
                  clamp(a.dz, cfg_.clamp_dz), clamp(a.dyaw, cfg_.clamp_dyaw)};
  }

  struct Deriv6 {
    double x, y, Lx, Ly, z, zd;
  };

  double vertical_force(const AlipState& s) const {
    const double z_target =
        sim_.h_s + cfg_.alip.nominal_height + sim_.swing_target.dz;
    const double g = cfg_.alip.gravity;
    const double acc = g +
                       draw_.gain_scale * cfg_.kp_height * (z_target - s.z) -
                       draw_.gain_scale * cfg_.kd_height * s.zdot;
    const double u = m_ep() * acc;
    return std::clamp(u, 0.0, cfg_.max_uz_factor * m_ep() * cfg_.alip.gravity);
  }

  Deriv6 field(const AlipState& s) const {
    const double zr = std::max(s.z - sim_.h_s, 0.05);
    const double m = m_ep();
    const double mg = m * cfg_.alip.gravity;
    const double u = vertical_force(s);
    return {s.L_y / (m * zr), s.L_x / (m * zr), mg * s.y_c, mg * s.x_c,
            s.zdot, u / m - cfg_.alip.gravity};
  }

  // RK4 at the physics rate over one control tick; returns the mean squared
  // vertical actuator force for the torque penalty.
  double integrate_control_tick() {
    const int n = cfg_.physics_substeps();
    const double h = cfg_.physics_dt;
    double u_sq = 0.0;
    for (int i = 0; i < n; ++i) {
      AlipState& s = sim_.alip;
      const double u0 = vertical_force(s);
      u_sq += u0 * u0;
      const Deriv6 k1 = field(s);
      AlipState s2 = s;
      s2.x_c += 0.5 * h * k1.x;
      s2.y_c += 0.5 * h * k1.y;
      s2.L_x += 0.5 * h * k1.Lx;
      s2.L_y += 0.5 * h * k1.Ly;
      s2.z += 0.5 * h * k1.z;
      s2.zdot += 0.5 * h * k1.zd;
      const Deriv6 k2 = field(s2);
      AlipState s3 = s;
      s3.x_c += 0.5 * h * k2.x;
      s3.y_c += 0.5 * h * k2.y;
      s3.L_x += 0.5 * h * k2.Lx;
      s3.L_y += 0.5 * h * k2.Ly;
      s3.z += 0.5 * h * k2.z;
      s3.zdot += 0.5 * h * k2.zd;
      const Deriv6 k3 = field(s3);
      AlipState s4 = s;
      s4.x_c += h * k3.x;
      s4.y_c += h * k3.y;
      s4.L_x += h * k3.Lx;
      s4.L_y += h * k3.Ly;
      s4.z += h * k3.z;
      s4.zdot += h * k3.zd;
      const Deriv6 k4 = field(s4);
      s.x_c += h / 6.0 * (k1.x + 2 * k2.x + 2 * k3.x + k4.x);
      s.y_c += h / 6.0 * (k1.y + 2 * k2.y + 2 * k3.y + k4.y);
      s.L_x += h / 6.0 * (k1.Lx + 2 * k2.Lx + 2 * k3.Lx + k4.Lx);
      s.L_y += h / 6.0 * (k1.Ly + 2 * k2.Ly + 2 * k3.Ly + k4.Ly);
      s.z += h / 6.0 * (k1.z + 2 * k2.z + 2 * k3.z + k4.z);
      s.zdot += h / 6.0 * (k1.zd + 2 * k2.zd + 2 * k3.zd + k4.zd);
      // World CoM tracks the heading-frame offsets from the fixed stance foot.
      sim_.x_w = stance_x_ + std::cos(sim_.yaw) * s.x_c -
                 std::sin(sim_.yaw) * s.y_c;
      sim_.y_w = stance_y_ + std::sin(sim_.yaw) * s.x_c +
                 std::cos(sim_.yaw) * s.y_c;
    }
    return u_sq / n;
  }

  void execute_foot_switch() {
    AlipState& s = sim_.alip;
    double px = sim_.swing_target.px;
    double py = sim_.swing_target.py;

    // Kinematic feasibility of the new leg at touchdown.
    const double foot_x =
        sim_.x_w + std::cos(sim_.yaw) * px - std::sin(sim_.yaw) * py;
    const double foot_y =
        sim_.y_w + std::sin(sim_.yaw) * px + std::cos(sim_.yaw) * py;
    double h_new = terrain_.height(foot_x, foot_y);
    const double zr_new = s.z - h_new;
    const double max_r2 = cfg_.max_leg_length * cfg_.max_leg_length -
                          zr_new * zr_new;
    if (max_r2 <= 0.0) {
      done_ = true;
      reason_ = DoneReason::fell;  // cannot reach the ground at all
      return;
    }
    const double r2 = px * px + py * py;
    if (r2 > max_r2) {
      const double scale = std::sqrt(max_r2 / r2);
      px *= scale;
      py *= scale;
    }

    // Reset map: the stance frame jumps to the new contact, momentum is
    // preserved, world CoM position is continuous.
    stance_x_ += std::cos(sim_.yaw) * (s.x_c + px) -
                 std::sin(sim_.yaw) * (s.y_c + py);
    stance_y_ += std::sin(sim_.yaw) * (s.x_c + px) +
                 std::cos(sim_.yaw) * (s.y_c + py);
    s.x_c = -px;
    s.y_c = -py;
    sim_.h_s = terrain_.height(stance_x_, stance_y_);

    // Heading increment, counted as the realized per-step yaw rate.
    const double dyaw = sim_.swing_target.dyaw;
    sim_.yaw += dyaw;
    const double c = std::cos(-dyaw), sn = std::sin(-dyaw);
    const double xc = s.x_c, yc = s.y_c, Ly = s.L_y, Lx = s.L_x;
    s.x_c = c * xc - sn * yc;
    s.y_c = sn * xc + c * yc;
    s.L_y = c * Ly - sn * Lx;
    s.L_x = sn * Ly + c * Lx;
    sim_.yaw_rate_real = dyaw / cfg_.alip.step_duration;

    sim_.stance_sign = -sim_.stance_sign;
    sim_.tick_in_step = 0;
  }

  void refresh_velocity() {
    sim_.v_inst_x = sim_.alip.L_y / (m_ep() * z_rel());
    sim_.v_inst_y = sim_.alip.L_x / (m_ep() * z_rel());
  }

  void compute_reward(double u_sq_mean, Transition& tr) const {
    const RewardTerms t =
        compute_reward_terms(v_real_x_, v_real_y_, sim_.yaw_rate_real, cmd_,
                             u_sq_mean, sim_.alip.zdot, cfg_.reward);
    tr.lin_term = t.lin;
    tr.ang_term = t.ang;
    tr.torque_term = t.torque;
    tr.zvel_term = t.zvel;
    tr.reward = t.total();
  }

  void check_termination() {
    if (done_) return;  // a failed switch already decided
    const AlipState& s = sim_.alip;
    const double leg =
        std::sqrt(s.x_c * s.x_c + s.y_c * s.y_c + z_rel() * z_rel());
    if (std::abs(s.x_c) > cfg_.fall_xy_limit ||
        std::abs(s.y_c) > cfg_.fall_xy_limit || leg > cfg_.max_leg_length) {
      done_ = true;
      reason_ = DoneReason::fell;
    } else if (sim_.alip.z - sim_.h_s < cfg_.min_height) {
      done_ = true;
      reason_ = DoneReason::height_collapse;
    } else if (sim_.tick >= cfg_.episode_ticks()) {
      done_ = true;
      reason_ = DoneReason::timeout;
    }
  }

  std::vector<double> observe() {
    std::array<double, 7> noise;
    for (double& n : noise) n = rng_.normal();
    return build_observation(sim_, cmd_, history_, noise, cfg_);
  }

  void push_history() {
    // Mirrors the noisy measured channels; the noise realization differs from
    // the one in the emitted observation, as separate reads of the sensors.
    std::array<double, 4> entry;
    entry[0] = sim_.alip.x_c + cfg_.obs_noise_pos * rng_.normal();
    entry[1] = sim_.alip.y_c + cfg_.obs_noise_pos * rng_.normal();
    entry[2] = sim_.v_inst_x + cfg_.obs_noise_vel * rng_.normal();
    entry[3] = sim_.v_inst_y + cfg_.obs_noise_vel * rng_.normal();
    history_.push_front(entry);
    while (static_cast<int>(history_.size()) > cfg_.history_len)
      history_.pop_back();
  }

  void fill_info(StepInfo& info) const {
    info.zdot = sim_.alip.zdot;
    info.expert = expert_action(sim_.alip, sim_.stance_sign, cmd_, cfg_.alip);
    info.mar_w = mar_weight(sim_.alip.zdot, cfg_.mar);
    info.v_real_x = v_real_x_;
    info.v_real_y = v_real_y_;
    info.yaw_rate_real = sim_.yaw_rate_real;
    info.terrain_level = terrain_.level_at(sim_.x_w);
    info.mass_scale = draw_.mass_scale;
    info.gain_scale = draw_.gain_scale;
    info.action_lag = draw_.action_lag;
  }

  void record_point(const Transition& tr) {
    TrajPoint p;
    p.tick = sim_.tick;
    p.t = sim_.tick * cfg_.control_dt;
    p.x_w = sim_.x_w;
    p.y_w = sim_.y_w;
    p.z = sim_.alip.z;
    p.zdot = sim_.alip.zdot;
    p.vx = v_real_x_;
    p.vy = v_real_y_;
    p.psi = sim_.yaw;
    p.phase = sim_.phase;
    p.stance = sim_.stance_sign;
    p.reward = tr.reward;
    p.w_mar = tr.info.mar_w;
    p.reason = reason_;
    traj_.push_back(p);
  }

  EnvConfig cfg_;
  Rng rng_;
  TerrainMap terrain_;
  GaitCommand cmd_;
  DynamicsDraw draw_;
  SimState sim_;
  double stance_x_ = 0.0, stance_y_ = 0.0;
  double v_real_x_ = 0.0, v_real_y_ = 0.0;
  bool done_ = false;
  DoneReason reason_ = DoneReason::none;
  EpisodeStats stats_;
  std::deque<std::array<double, 4>> history_;
  double step_start_x_ = 0.0, step_start_y_ = 0.0;
  int steps_completed_ = 0;
  size_t push_idx_ = 0;
  bool record_ = false;
  std::vector<TrajPoint> traj_;
};

}  // namespace ppf

#endif  // PPF_ENV_HPP_
