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

// Run configuration: a flat, typed, INI-style key-value format with
// sections. Keys may be written either inside a [section] or as dotted
// top-level keys (`mar.w0 = 5`). Unknown keys, type errors, and constraint
// violations are rejected with the offending line number.

#ifndef PPF_CONFIG_HPP_
#define PPF_CONFIG_HPP_

#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ppf/env.hpp"
#include "ppf/evalkit.hpp"
#include "ppf/trainer.hpp"

namespace ppf {

struct RunConfig {
  EnvConfig env;        // embeds AlipParams, MarConfig, rewards, randomization
  TrainConfig train;
  int eval_seeds = 5;
  std::string eval_scenario = "flat:0.6";
  uint64_t seed = 0;

  void validate() const {
    env.validate();
    train.validate();
    if (eval_seeds <= 0)
      throw std::invalid_argument("eval.seeds must be > 0");
  }
};

namespace detail {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline double parse_double(const std::string& v) {
  size_t used = 0;
  const double d = std::stod(v, &used);
  if (used != v.size()) throw std::invalid_argument("not a number: " + v);
  return d;
}

inline int parse_int(const std::string& v) {
  size_t used = 0;
  const long d = std::stol(v, &used);
  if (used != v.size()) throw std::invalid_argument("not an integer: " + v);
  return static_cast<int>(d);
}

inline int64_t parse_i64(const std::string& v) {
  size_t used = 0;
  const long long d = std::stoll(v, &used);
  if (used != v.size()) throw std::invalid_argument("not an integer: " + v);
  return d;
}

inline uint64_t parse_u64(const std::string& v) {
  size_t used = 0;
  const unsigned long long d = std::stoull(v, &used);
  if (used != v.size()) throw std::invalid_argument("not an integer: " + v);
  return d;
}

inline std::vector<int> parse_int_list(const std::string& v) {
  std::vector<int> out;
  if (trim(v).empty()) return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ','))
    out.push_back(parse_int(trim(item)));
  return out;
}

using Setter = std::function<void(const std::string&, RunConfig&)>;

inline const std::map<std::string, Setter>& config_schema() {
  static const std::map<std::string, Setter> schema = [] {
    std::map<std::string, Setter> m;
    auto dbl = [&m](const std::string& key, auto member,
                    double lo = -1e300, bool strict_lo = false) {
      m[key] = [key, member, lo, strict_lo](const std::string& v,
                                            RunConfig& c) {
        const double d = parse_double(v);
        if (strict_lo ? !(d > lo) : !(d >= lo))
          throw std::invalid_argument(key + ": must be " +
                                      (strict_lo ? "> " : ">= ") +
                                      format_double(lo));
        member(c) = d;
      };
    };
    auto integer = [&m](const std::string& key, auto member, int lo) {
      m[key] = [key, member, lo](const std::string& v, RunConfig& c) {
        const int d = parse_int(v);
        if (d < lo)
          throw std::invalid_argument(key + ": must be >= " +
                                      std::to_string(lo));
        member(c) = d;
      };
    };

    dbl("alip.mass", [](RunConfig& c) -> double& { return c.env.alip.mass; },
        0.0, true);
    dbl("alip.gravity",
        [](RunConfig& c) -> double& { return c.env.alip.gravity; }, 0.0, true);
    dbl("alip.nominal_height",
        [](RunConfig& c) -> double& { return c.env.alip.nominal_height; }, 0.0,
        true);
    dbl("alip.step_duration",
        [](RunConfig& c) -> double& { return c.env.alip.step_duration; }, 0.0,
        true);
    dbl("alip.step_width",
        [](RunConfig& c) -> double& { return c.env.alip.step_width; }, 0.0);

    dbl("mar.w0", [](RunConfig& c) -> double& { return c.env.mar.w0; }, 0.0);
    dbl("mar.delta", [](RunConfig& c) -> double& { return c.env.mar.delta; },
        0.0, true);

    dbl("env.control_dt",
        [](RunConfig& c) -> double& { return c.env.control_dt; }, 0.0, true);
    dbl("env.physics_dt",
        [](RunConfig& c) -> double& { return c.env.physics_dt; }, 0.0, true);
    dbl("env.episode_length",
        [](RunConfig& c) -> double& { return c.env.episode_length; }, 0.0,
        true);
    dbl("env.kp_height",
        [](RunConfig& c) -> double& { return c.env.kp_height; }, 0.0);
    dbl("env.kd_height",
        [](RunConfig& c) -> double& { return c.env.kd_height; }, 0.0);
    dbl("env.max_uz_factor",
        [](RunConfig& c) -> double& { return c.env.max_uz_factor; }, 1.0);
    dbl("env.max_leg_length",
        [](RunConfig& c) -> double& { return c.env.max_leg_length; }, 0.0,
        true);
    dbl("env.fall_xy_limit",
        [](RunConfig& c) -> double& { return c.env.fall_xy_limit; }, 0.0,
        true);
    dbl("env.min_height",
        [](RunConfig& c) -> double& { return c.env.min_height; }, 0.0, true);
    dbl("env.clamp_px", [](RunConfig& c) -> double& { return c.env.clamp_px; },
        0.0, true);
    dbl("env.clamp_py", [](RunConfig& c) -> double& { return c.env.clamp_py; },
        0.0, true);
    dbl("env.clamp_dz", [](RunConfig& c) -> double& { return c.env.clamp_dz; },
        0.0);
    dbl("env.clamp_dyaw",
        [](RunConfig& c) -> double& { return c.env.clamp_dyaw; }, 0.0);
    dbl("env.cmd_vx_init",
        [](RunConfig& c) -> double& { return c.env.cmd_vx_init; }, 0.0);
    dbl("env.cmd_vx_cap",
        [](RunConfig& c) -> double& { return c.env.cmd_vx_cap; }, 0.0);
    dbl("env.cmd_vy_range",
        [](RunConfig& c) -> double& { return c.env.cmd_vy_range; }, 0.0);
    dbl("env.cmd_yaw_range",
        [](RunConfig& c) -> double& { return c.env.cmd_yaw_range; }, 0.0);
    dbl("env.obs_noise_vel",
        [](RunConfig& c) -> double& { return c.env.obs_noise_vel; }, 0.0);
    dbl("env.obs_noise_pos",
        [](RunConfig& c) -> double& { return c.env.obs_noise_pos; }, 0.0);
    integer("env.history_len",
            [](RunConfig& c) -> int& { return c.env.history_len; }, 0);
    dbl("env.rand_mass_lo",
        [](RunConfig& c) -> double& { return c.env.rand.mass_scale_lo; }, 0.0,
        true);
    dbl("env.rand_mass_hi",
        [](RunConfig& c) -> double& { return c.env.rand.mass_scale_hi; }, 0.0,
        true);
    dbl("env.rand_gain_lo",
        [](RunConfig& c) -> double& { return c.env.rand.gain_scale_lo; }, 0.0,
        true);
    dbl("env.rand_gain_hi",
        [](RunConfig& c) -> double& { return c.env.rand.gain_scale_hi; }, 0.0,
        true);
    dbl("env.rand_lag_max",
        [](RunConfig& c) -> double& { return c.env.rand.action_lag_max; },
        0.0);
    dbl("env.push_rate",
        [](RunConfig& c) -> double& { return c.env.rand.push_rate; }, 0.0);
    dbl("env.push_vel_max",
        [](RunConfig& c) -> double& { return c.env.rand.push_vel_max; }, 0.0);

    dbl("reward.w_lin",
        [](RunConfig& c) -> double& { return c.env.reward.w_lin; });
    dbl("reward.w_ang",
        [](RunConfig& c) -> double& { return c.env.reward.w_ang; });
    dbl("reward.w_torque",
        [](RunConfig& c) -> double& { return c.env.reward.w_torque; });
    dbl("reward.w_zvel",
        [](RunConfig& c) -> double& { return c.env.reward.w_zvel; });
    dbl("reward.delta_xy",
        [](RunConfig& c) -> double& { return c.env.reward.delta_xy; }, 0.0,
        true);
    dbl("reward.delta_omega",
        [](RunConfig& c) -> double& { return c.env.reward.delta_omega; }, 0.0,
        true);

    m["train.variant"] = [](const std::string& v, RunConfig& c) {
      c.train.variant = parse_variant(v);
    };
    dbl("train.clip", [](RunConfig& c) -> double& { return c.train.clip; },
        0.0, true);
    dbl("train.gamma", [](RunConfig& c) -> double& { return c.train.gamma; },
        0.0, true);
    dbl("train.lambda", [](RunConfig& c) -> double& { return c.train.lam; },
        0.0);
    integer("train.epochs",
            [](RunConfig& c) -> int& { return c.train.epochs; }, 1);
    integer("train.minibatches",
            [](RunConfig& c) -> int& { return c.train.minibatches; }, 1);
    dbl("train.value_coef",
        [](RunConfig& c) -> double& { return c.train.value_coef; }, 0.0);
    dbl("train.grad_clip",
        [](RunConfig& c) -> double& { return c.train.grad_clip; }, 0.0, true);
    dbl("train.lr", [](RunConfig& c) -> double& { return c.train.lr; }, 0.0,
        true);
    dbl("train.alpha",
        [](RunConfig& c) -> double& { return c.train.lipschitz_alpha; }, 0.0);
    dbl("train.lipschitz_eps",
        [](RunConfig& c) -> double& { return c.train.lipschitz_eps; }, 0.0,
        true);
    integer("train.num_envs",
            [](RunConfig& c) -> int& { return c.train.num_envs; }, 1);
    integer("train.horizon",
            [](RunConfig& c) -> int& { return c.train.horizon; }, 1);
    integer("train.iterations",
            [](RunConfig& c) -> int& { return c.train.iterations; }, 0);
    m["train.hidden"] = [](const std::string& v, RunConfig& c) {
      c.train.hidden = parse_int_list(v);
      for (int h : c.train.hidden)
        if (h <= 0)
          throw std::invalid_argument("train.hidden: sizes must be > 0");
    };
    dbl("train.log_std_init",
        [](RunConfig& c) -> double& { return c.train.log_std_init; });
    integer("train.dagger_iterations",
            [](RunConfig& c) -> int& { return c.train.dagger_iterations; }, 0);
    integer("train.dagger_passes",
            [](RunConfig& c) -> int& { return c.train.dagger_passes; }, 1);
    integer("train.dagger_minibatch",
            [](RunConfig& c) -> int& { return c.train.dagger_minibatch; }, 1);
    dbl("train.dagger_lr",
        [](RunConfig& c) -> double& { return c.train.dagger_lr; }, 0.0, true);
    m["train.dagger_buffer_cap"] = [](const std::string& v, RunConfig& c) {
      c.train.dagger_buffer_cap = parse_i64(v);
      if (c.train.dagger_buffer_cap <= 0)
        throw std::invalid_argument("train.dagger_buffer_cap: must be > 0");
    };
    integer("train.dagger_samples",
            [](RunConfig& c) -> int& { return c.train.dagger_samples; }, 1);

    integer("eval.seeds", [](RunConfig& c) -> int& { return c.eval_seeds; },
            1);
    m["eval.scenario"] = [](const std::string& v, RunConfig& c) {
      Scenario::parse(v);  // reject malformed values now
      c.eval_scenario = v;
    };
    m["seed"] = [](const std::string& v, RunConfig& c) {
      c.seed = parse_u64(v);
    };
    return m;
  }();
  return schema;
}

}  // namespace detail

inline RunConfig parse_config_text(const std::string& text,
                                   const std::string& origin = "config") {
  RunConfig cfg;
  const auto& schema = detail::config_schema();
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw detail::ConfigError(origin + ":" + std::to_string(lineno) +
                                  ": malformed section header");
      section = detail::trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw detail::ConfigError(origin + ":" + std::to_string(lineno) +
                                ": expected key = value");
    std::string key = detail::trim(t.substr(0, eq));
    const std::string value = detail::trim(t.substr(eq + 1));
    if (!section.empty()) key = section + "." + key;
    const auto it = schema.find(key);
    if (it == schema.end())
      throw detail::ConfigError(origin + ":" + std::to_string(lineno) +
                                ": unknown key '" + key + "'");
    try {
      it->second(value, cfg);
    } catch (const std::exception& ex) {
      throw detail::ConfigError(origin + ":" + std::to_string(lineno) + ": " +
                                ex.what());
    }
  }
  try {
    cfg.validate();
  } catch (const std::exception& ex) {
    throw detail::ConfigError(origin + ": " + ex.what());
  }
  return cfg;
}

inline RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_config_text(text, path);
}

// Canonical echo of the full effective configuration; parsing it back
// reproduces the same RunConfig.
inline std::string echo_config(const RunConfig& c) {
  std::ostringstream o;
  auto kv = [&o](const std::string& k, const std::string& v) {
    o << k << " = " << v << "\n";
  };
  kv("seed", std::to_string(c.seed));
  o << "\n[alip]\n";
  kv("mass", format_double(c.env.alip.mass));
  kv("gravity", format_double(c.env.alip.gravity));
  kv("nominal_height", format_double(c.env.alip.nominal_height));
  kv("step_duration", format_double(c.env.alip.step_duration));
  kv("step_width", format_double(c.env.alip.step_width));
  o << "\n[mar]\n";
  kv("w0", format_double(c.env.mar.w0));
  kv("delta", format_double(c.env.mar.delta));
  o << "\n[env]\n";
  kv("control_dt", format_double(c.env.control_dt));
  kv("physics_dt", format_double(c.env.physics_dt));
  kv("episode_length", format_double(c.env.episode_length));
  kv("kp_height", format_double(c.env.kp_height));
  kv("kd_height", format_double(c.env.kd_height));
  kv("max_uz_factor", format_double(c.env.max_uz_factor));
  kv("max_leg_length", format_double(c.env.max_leg_length));
  kv("fall_xy_limit", format_double(c.env.fall_xy_limit));
  kv("min_height", format_double(c.env.min_height));
  kv("clamp_px", format_double(c.env.clamp_px));
  kv("clamp_py", format_double(c.env.clamp_py));
  kv("clamp_dz", format_double(c.env.clamp_dz));
  kv("clamp_dyaw", format_double(c.env.clamp_dyaw));
  kv("cmd_vx_init", format_double(c.env.cmd_vx_init));
  kv("cmd_vx_cap", format_double(c.env.cmd_vx_cap));
  kv("cmd_vy_range", format_double(c.env.cmd_vy_range));
  kv("cmd_yaw_range", format_double(c.env.cmd_yaw_range));
  kv("obs_noise_vel", format_double(c.env.obs_noise_vel));
  kv("obs_noise_pos", format_double(c.env.obs_noise_pos));
  kv("history_len", std::to_string(c.env.history_len));
  kv("rand_mass_lo", format_double(c.env.rand.mass_scale_lo));
  kv("rand_mass_hi", format_double(c.env.rand.mass_scale_hi));
  kv("rand_gain_lo", format_double(c.env.rand.gain_scale_lo));
  kv("rand_gain_hi", format_double(c.env.rand.gain_scale_hi));
  kv("rand_lag_max", format_double(c.env.rand.action_lag_max));
  kv("push_rate", format_double(c.env.rand.push_rate));
  kv("push_vel_max", format_double(c.env.rand.push_vel_max));
  o << "\n[reward]\n";
  kv("w_lin", format_double(c.env.reward.w_lin));
  kv("w_ang", format_double(c.env.reward.w_ang));
  kv("w_torque", format_double(c.env.reward.w_torque));
  kv("w_zvel", format_double(c.env.reward.w_zvel));
  kv("delta_xy", format_double(c.env.reward.delta_xy));
  kv("delta_omega", format_double(c.env.reward.delta_omega));
  o << "\n[train]\n";
  kv("variant", to_string(c.train.variant));
  kv("clip", format_double(c.train.clip));
  kv("gamma", format_double(c.train.gamma));
  kv("lambda", format_double(c.train.lam));
  kv("epochs", std::to_string(c.train.epochs));
  kv("minibatches", std::to_string(c.train.minibatches));
  kv("value_coef", format_double(c.train.value_coef));
  kv("grad_clip", format_double(c.train.grad_clip));
  kv("lr", format_double(c.train.lr));
  kv("alpha", format_double(c.train.lipschitz_alpha));
  kv("lipschitz_eps", format_double(c.train.lipschitz_eps));
  kv("num_envs", std::to_string(c.train.num_envs));
  kv("horizon", std::to_string(c.train.horizon));
  kv("iterations", std::to_string(c.train.iterations));
  {
    std::string h;
    for (size_t i = 0; i < c.train.hidden.size(); ++i) {
      if (i) h += ",";
      h += std::to_string(c.train.hidden[i]);
    }
    kv("hidden", h);
  }
  kv("log_std_init", format_double(c.train.log_std_init));
  kv("dagger_iterations", std::to_string(c.train.dagger_iterations));
  kv("dagger_passes", std::to_string(c.train.dagger_passes));
  kv("dagger_minibatch", std::to_string(c.train.dagger_minibatch));
  kv("dagger_lr", format_double(c.train.dagger_lr));
  kv("dagger_buffer_cap", std::to_string(c.train.dagger_buffer_cap));
  kv("dagger_samples", std::to_string(c.train.dagger_samples));
  o << "\n[eval]\n";
  kv("seeds", std::to_string(c.eval_seeds));
  kv("scenario", c.eval_scenario);
  return o.str();
}

}  // namespace ppf

#endif  // PPF_CONFIG_HPP_
