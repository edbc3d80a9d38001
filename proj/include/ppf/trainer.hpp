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

// Two-stage training pipeline: behavior-cloning distillation of the step
// controller with dataset aggregation, then clipped-surrogate policy-gradient
// fine-tuning with a variant-selectable expert regularizer:
//
//   purerl  - no pretraining, no regularization
//   ifm     - pretrained init, no regularization
//   fullreg - constant-weight expert matching, w0 * ||aE - mu(s)||^2
//   ppf     - per-sample weight w(s) = w0 exp(-zdot^2 / delta)
//
// fullreg and ppf share one weighted-loss code path (weights held in 32-bit),
// so the degenerate settings w0 = 0 and delta -> inf reproduce ifm and
// fullreg bit-for-bit.

#ifndef PPF_TRAINER_HPP_
#define PPF_TRAINER_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ppf/csv.hpp"
#include "ppf/env.hpp"
#include "ppf/nn.hpp"
#include "ppf/parallel.hpp"
#include "ppf/rng.hpp"

namespace ppf {

enum class Variant { purerl, ifm, fullreg, ppf };

inline const char* to_string(Variant v) {
  switch (v) {
    case Variant::purerl: return "purerl";
    case Variant::ifm: return "ifm";
    case Variant::fullreg: return "fullreg";
    case Variant::ppf: return "ppf";
  }
  return "?";
}

inline Variant parse_variant(const std::string& s) {
  if (s == "purerl") return Variant::purerl;
  if (s == "ifm") return Variant::ifm;
  if (s == "fullreg") return Variant::fullreg;
  if (s == "ppf") return Variant::ppf;
  throw std::invalid_argument("unknown variant: " + s);
}

struct TrainConfig {
  Variant variant = Variant::ppf;

  // PPO
  double clip = 0.2;
  double gamma = 0.99;
  double lam = 0.95;
  int epochs = 4;
  int minibatches = 4;
  double value_coef = 0.5;
  double grad_clip = 1.0;
  double lr = 3e-4;
  double lipschitz_alpha = 1e-4;
  double lipschitz_eps = 1e-3;
  int num_envs = 16;
  int horizon = 2048;
  int iterations = 300;
  int value_warmup = 10;  // iterations of critic-only updates at the start
  std::vector<int> hidden = {64, 64};
  double log_std_init = -2.995732273553991;  // ln(0.05)

  // Distillation
  int dagger_iterations = 50;
  int dagger_passes = 5;
  int dagger_minibatch = 256;
  double dagger_lr = 1e-3;
  int64_t dagger_buffer_cap = 1000000;
  int dagger_samples = 2048;  // per iteration

  int workers = 1;

  void validate() const {
    if (clip <= 0 || gamma <= 0 || gamma > 1 || lam < 0 || lam > 1)
      throw std::invalid_argument("train: bad ppo constants");
    if (epochs <= 0 || minibatches <= 0 || num_envs <= 0 || horizon <= 0 ||
        iterations < 0)
      throw std::invalid_argument("train: counts must be positive");
    if (lr <= 0 || dagger_lr <= 0)
      throw std::invalid_argument("train: learning rates must be > 0");
    if (lipschitz_alpha < 0 || lipschitz_eps <= 0)
      throw std::invalid_argument("train: bad lipschitz settings");
    if (value_coef < 0 || grad_clip <= 0)
      throw std::invalid_argument("train: bad value/grad settings");
    for (int h : hidden)
      if (h <= 0) throw std::invalid_argument("train: bad hidden sizes");
    if (dagger_iterations < 0 || dagger_passes <= 0 || dagger_minibatch <= 0 ||
        dagger_buffer_cap <= 0 || dagger_samples <= 0)
      throw std::invalid_argument("train: bad distillation settings");
    if (workers < 1) throw std::invalid_argument("train: workers must be >= 1");
  }

  std::vector<int> policy_sizes(int obs_dim, int act_dim) const {
    std::vector<int> s{obs_dim};
    s.insert(s.end(), hidden.begin(), hidden.end());
    s.push_back(act_dim);
    return s;
  }
  std::vector<int> value_sizes(int obs_dim) const {
    std::vector<int> s{obs_dim};
    s.insert(s.end(), hidden.begin(), hidden.end());
    s.push_back(1);
    return s;
  }
};

inline constexpr int kActDim = 4;

// On-policy transitions, env-major layout [env * horizon + t].
struct RolloutBatch {
  int num_envs = 0;
  int horizon = 0;
  int obs_dim = 0;
  std::vector<double> obs;        // n * obs_dim
  std::vector<double> act;        // n * kActDim
  std::vector<double> logp;       // n
  std::vector<double> value;      // n
  std::vector<double> reward;     // n
  std::vector<uint8_t> done;      // n, episode boundary
  std::vector<double> boot;       // n, bootstrap value where done (0 if fell)
  std::vector<double> expert;     // n * kActDim, expert labels a^E
  std::vector<float> w;           // n, assumption weights w(s)
  std::vector<double> final_boot; // per env, V at the truncation state
  std::vector<double> adv;        // n
  std::vector<double> ret;        // n

  // Collection-time aggregates.
  std::vector<double> finished_returns;
  std::vector<int> finished_lengths;
  double sum_lin_term = 0.0;
  double sum_ang_term = 0.0;
  double mean_terrain_level = 0.0;
  double mean_vx_cap = 0.0;

  int n() const { return num_envs * horizon; }
  std::span<const double> obs_at(int i) const {
    return {obs.data() + static_cast<size_t>(i) * obs_dim,
            static_cast<size_t>(obs_dim)};
  }
  std::span<const double> act_at(int i) const {
    return {act.data() + static_cast<size_t>(i) * kActDim,
            static_cast<size_t>(kActDim)};
  }
  std::span<const double> expert_at(int i) const {
    return {expert.data() + static_cast<size_t>(i) * kActDim,
            static_cast<size_t>(kActDim)};
  }
};

// Generalized advantage estimation over one trajectory slice. Samples with
// done set are terminal (no bootstrap); if the slice ends without done, the
// final transition bootstraps `bootstrap_value`.
inline void compute_gae(std::span<const double> rewards,
                        std::span<const double> values,
                        std::span<const uint8_t> dones, double gamma,
                        double lam, std::span<double> advantages,
                        std::span<double> returns,
                        double bootstrap_value = 0.0,
                        std::span<const double> done_bootstraps = {}) {
  const size_t n = rewards.size();
  if (values.size() != n || dones.size() != n || advantages.size() != n ||
      returns.size() != n)
    throw std::invalid_argument("gae: length mismatch");
  if (!done_bootstraps.empty() && done_bootstraps.size() != n)
    throw std::invalid_argument("gae: bootstrap length mismatch");
  double carry = 0.0;
  double next_value = bootstrap_value;
  for (size_t k = n; k-- > 0;) {
    if (dones[k]) {
      next_value = done_bootstraps.empty() ? 0.0 : done_bootstraps[k];
      carry = 0.0;
    }
    const double delta = rewards[k] + gamma * next_value - values[k];
    carry = delta + gamma * lam * carry;
    advantages[k] = carry;
    returns[k] = advantages[k] + values[k];
    next_value = values[k];
  }
}

// Expert-matching regularizer, Monte-Carlo mean over the batch:
//   purerl, ifm: 0
//   fullreg:     w0   * mean ||a^E - mu(s)||^2
//   ppf:         mean[ w(s) ||a^E - mu(s)||^2 ]
// Weights go through 32-bit storage, which is what collapses the ppf
// degenerate settings onto ifm/fullreg exactly.
inline double regularization_loss(const RolloutBatch& batch,
                                  const GaussianPolicy& policy,
                                  Variant variant, const MarConfig& mar) {
  if (variant == Variant::purerl || variant == Variant::ifm) return 0.0;
  if (batch.expert.empty() || batch.w.empty())
    throw std::invalid_argument("regularization: batch lacks expert labels");
  const float w0 = static_cast<float>(mar.w0);
  double loss = 0.0;
  for (int i = 0; i < batch.n(); ++i) {
    const float wi = (variant == Variant::fullreg) ? w0 : batch.w[i];
    if (wi == 0.0f) continue;
    const std::vector<double> mu = forward(policy.mean, batch.obs_at(i));
    const auto ae = batch.expert_at(i);
    double e2 = 0.0;
    for (int d = 0; d < kActDim; ++d) {
      const double e = ae[d] - mu[d];
      e2 += e * e;
    }
    loss += static_cast<double>(wi) * e2;
  }
  return loss / batch.n();
}

// Owns the parallel environment instances, their curricula, and the
// per-environment random streams used for episode draws and exploration.
class EnvPool {
 public:
  EnvPool(const EnvConfig& env_cfg, int num_envs, uint64_t root_seed,
          std::vector<TerrainKind> kinds = {TerrainKind::flat,
                                            TerrainKind::uphill,
                                            TerrainKind::downhill,
                                            TerrainKind::uneven_a,
                                            TerrainKind::uneven_b})
      : cfg_(env_cfg), kinds_(std::move(kinds)) {
    if (num_envs <= 0) throw std::invalid_argument("env pool: need envs");
    for (int e = 0; e < num_envs; ++e) {
      envs_.emplace_back(cfg_);
      rngs_.emplace_back(derive_seed(root_seed, 0x700 + e));
      curricula_.push_back(CurriculumState{0.0, cfg_.cmd_vx_init});
      current_.push_back(Transition{});
    }
    finished_returns_.assign(num_envs, {});
    finished_lengths_.assign(num_envs, {});
    for (int e = 0; e < num_envs; ++e) reset_env(e);
  }

  int size() const { return static_cast<int>(envs_.size()); }
  BipedEnv& env(int e) { return envs_[e]; }
  Rng& rng(int e) { return rngs_[e]; }
  const Transition& current(int e) const { return current_[e]; }
  const CurriculumState& curriculum(int e) const { return curricula_[e]; }

  void reset_env(int e) {
    Rng& r = rngs_[e];
    const TerrainKind kind = kinds_[r.uniform_int(static_cast<int>(kinds_.size()))];
    const double level = curricula_[e].terrain_level;
    const TerrainField field = generate_terrain(kind, level, r.next_u64());
    GaitCommand cmd;
    cmd.vx = r.uniform(0.0, curricula_[e].vx_cap);
    cmd.vy = r.uniform(-cfg_.cmd_vy_range, cfg_.cmd_vy_range);
    cmd.yaw_rate = r.uniform(-cfg_.cmd_yaw_range, cfg_.cmd_yaw_range);
    current_[e] = envs_[e].reset(r.next_u64(), TerrainMap::single(field), cmd);
  }

  // Steps env e, handling curriculum update and auto-reset at episode end.
  // Returns the transition produced by the step (before any reset).
  Transition step_env(int e, const Action& a) {
    Transition tr = envs_[e].step(a);
    if (tr.done) {
      curricula_[e] = update_curriculum(envs_[e].stats(), curricula_[e], cfg_);
      finished_returns_[e].push_back(envs_[e].stats().sum_reward);
      finished_lengths_[e].push_back(envs_[e].stats().ticks);
      reset_env(e);
    } else {
      current_[e] = tr;
    }
    return tr;
  }

  // Drains per-env episode logs in fixed env order.
  void drain_finished(std::vector<double>* returns, std::vector<int>* lengths) {
    for (int e = 0; e < size(); ++e) {
      returns->insert(returns->end(), finished_returns_[e].begin(),
                      finished_returns_[e].end());
      lengths->insert(lengths->end(), finished_lengths_[e].begin(),
                      finished_lengths_[e].end());
      finished_returns_[e].clear();
      finished_lengths_[e].clear();
    }
  }

  void prepare_collection() {
    finished_returns_.assign(size(), {});
    finished_lengths_.assign(size(), {});
  }

  const EnvConfig& config() const { return cfg_; }

 private:
  EnvConfig cfg_;
  std::vector<TerrainKind> kinds_;
  std::vector<BipedEnv> envs_;
  std::vector<Rng> rngs_;
  std::vector<CurriculumState> curricula_;
  std::vector<Transition> current_;
  std::vector<std::vector<double>> finished_returns_;
  std::vector<std::vector<int>> finished_lengths_;
};

// On-policy rollout with stochastic actions; every visited state carries its
// expert label and assumption weight. Deterministic for a fixed pool state,
// independent of the worker count.
inline RolloutBatch collect_rollouts(const GaussianPolicy& policy,
                                     const Mlp& value, EnvPool& pool,
                                     int horizon, int workers = 1) {
  RolloutBatch b;
  b.num_envs = pool.size();
  b.horizon = horizon;
  b.obs_dim = policy.obs_dim();
  const int n = b.n();
  b.obs.resize(static_cast<size_t>(n) * b.obs_dim);
  b.act.resize(static_cast<size_t>(n) * kActDim);
  b.logp.resize(n);
  b.value.resize(n);
  b.reward.resize(n);
  b.done.resize(n);
  b.boot.resize(n);
  b.expert.resize(static_cast<size_t>(n) * kActDim);
  b.w.resize(n);
  b.final_boot.resize(pool.size());
  b.adv.resize(n);
  b.ret.resize(n);

  pool.prepare_collection();
  std::vector<double> level_sum(pool.size(), 0.0);
  std::vector<double> lin_sum(pool.size(), 0.0), ang_sum(pool.size(), 0.0);

  parallel_for(pool.size(), workers, [&](int e) {
    for (int t = 0; t < horizon; ++t) {
      const int i = e * horizon + t;
      const Transition& cur = pool.current(e);
      if (static_cast<int>(cur.observation.size()) != b.obs_dim)
        throw std::runtime_error("env " + std::to_string(e) +
                                 ": observation size mismatch");
      std::copy(cur.observation.begin(), cur.observation.end(),
                b.obs.begin() + static_cast<size_t>(i) * b.obs_dim);
      const auto obs = b.obs_at(i);
      double lp = 0.0;
      const std::vector<double> a = gaussian_sample(policy, obs, pool.rng(e), &lp);
      std::copy(a.begin(), a.end(),
                b.act.begin() + static_cast<size_t>(i) * kActDim);
      b.logp[i] = lp;
      b.value[i] = forward(value, obs)[0];

      Transition tr;
      try {
        tr = pool.step_env(e, Action::from_array({a[0], a[1], a[2], a[3]}));
      } catch (const std::exception& ex) {
        throw std::runtime_error("env " + std::to_string(e) + ": " + ex.what());
      }
      b.reward[i] = tr.reward;
      b.done[i] = tr.done ? 1 : 0;
      b.boot[i] = (tr.done && tr.reason == DoneReason::timeout)
                      ? forward(value, tr.observation)[0]
                      : 0.0;
      const auto ae = tr.info.expert.to_array();
      std::copy(ae.begin(), ae.end(),
                b.expert.begin() + static_cast<size_t>(i) * kActDim);
      b.w[i] = static_cast<float>(tr.info.mar_w);
      lin_sum[e] += tr.lin_term;
      ang_sum[e] += tr.ang_term;
      level_sum[e] += tr.info.terrain_level;
    }
    b.final_boot[e] = forward(value, pool.current(e).observation)[0];
  });

  b.finished_returns.clear();
  b.finished_lengths.clear();
  pool.drain_finished(&b.finished_returns, &b.finished_lengths);
  double lvl = 0.0, cap = 0.0;
  for (int e = 0; e < pool.size(); ++e) {
    b.sum_lin_term += lin_sum[e];
    b.sum_ang_term += ang_sum[e];
    lvl += level_sum[e] / horizon;
    cap += pool.curriculum(e).vx_cap;
  }
  b.mean_terrain_level = lvl / pool.size();
  b.mean_vx_cap = cap / pool.size();
  return b;
}

inline void compute_batch_gae(RolloutBatch& b, double gamma, double lam) {
  for (int e = 0; e < b.num_envs; ++e) {
    const size_t off = static_cast<size_t>(e) * b.horizon;
    compute_gae(std::span(b.reward).subspan(off, b.horizon),
                std::span(b.value).subspan(off, b.horizon),
                std::span(b.done).subspan(off, b.horizon), gamma, lam,
                std::span(b.adv).subspan(off, b.horizon),
                std::span(b.ret).subspan(off, b.horizon), b.final_boot[e],
                std::span(b.boot).subspan(off, b.horizon));
  }
}

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double reg_loss = 0.0;
  double lipschitz = 0.0;
  double kl = 0.0;
  double clip_frac = 0.0;
  double grad_norm = 0.0;
};

struct PpoState {
  Adam opt_mean;
  Adam opt_logstd;
  Adam opt_value;
  PpoState(const GaussianPolicy& p, const Mlp& v, double lr)
      : opt_mean(p.mean.params.size(), lr),
        opt_logstd(p.log_std.size(), lr),
        opt_value(v.params.size(), lr) {}
};

// One PPO update over the batch: clipped surrogate + value loss + variant
// regularization + input-sensitivity penalty, Adam with a global grad-norm
// clip. Throws after restoring the entry parameters if the loss goes
// non-finite.
inline UpdateStats ppo_update(RolloutBatch& batch, GaussianPolicy& policy,
                              Mlp& value, PpoState& state,
                              const TrainConfig& cfg, const MarConfig& mar,
                              Rng& rng) {
  const int n = batch.n();
  if (n == 0) throw std::invalid_argument("ppo: empty batch");

  // Advantage normalization over the whole batch.
  double mean = 0.0;
  for (double a : batch.adv) mean += a;
  mean /= n;
  double var = 0.0;
  for (double a : batch.adv) var += (a - mean) * (a - mean);
  var /= n;
  const double inv_std = 1.0 / (std::sqrt(var) + 1e-8);
  for (double& a : batch.adv) a = (a - mean) * inv_std;

  const std::vector<float> mean_snapshot = policy.mean.params;
  const std::vector<float> logstd_snapshot = policy.log_std;
  const std::vector<float> value_snapshot = value.params;

  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;

  UpdateStats stats;
  int stat_batches = 0;

  std::vector<double> g_mean(policy.mean.params.size());
  std::vector<double> g_lips(policy.mean.params.size());
  std::vector<double> g_logstd(policy.log_std.size());
  std::vector<double> g_value(value.params.size());
  const float w0f = static_cast<float>(mar.w0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates shuffle from the trainer stream.
    for (int i = n - 1; i > 0; --i)
      std::swap(order[i], order[rng.uniform_int(i + 1)]);

    for (int mb = 0; mb < cfg.minibatches; ++mb) {
      const int lo = static_cast<int>(static_cast<int64_t>(n) * mb /
                                      cfg.minibatches);
      const int hi = static_cast<int>(static_cast<int64_t>(n) * (mb + 1) /
                                      cfg.minibatches);
      const int m = hi - lo;
      if (m == 0) continue;
      std::fill(g_mean.begin(), g_mean.end(), 0.0);
      std::fill(g_lips.begin(), g_lips.end(), 0.0);
      std::fill(g_logstd.begin(), g_logstd.end(), 0.0);
      std::fill(g_value.begin(), g_value.end(), 0.0);

      double loss_pi = 0.0, loss_v = 0.0, loss_reg = 0.0, lips = 0.0;
      double kl = 0.0, clipped = 0.0;

      for (int k = lo; k < hi; ++k) {
        const int i = order[k];
        const auto obs = batch.obs_at(i);
        const auto act = batch.act_at(i);
        const double adv = batch.adv[i];

        MlpCache cache;
        const std::vector<double> mu = forward(policy.mean, obs, &cache);
        const double logp_new =
            gaussian_logprob_from_mean(mu, policy.log_std, act);
        const double ratio = std::exp(logp_new - batch.logp[i]);
        const double r_clip =
            std::clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip);
        const double s1 = ratio * adv;
        const double s2 = r_clip * adv;
        loss_pi += -std::min(s1, s2) / m;
        kl += (batch.logp[i] - logp_new) / m;
        if (std::abs(ratio - 1.0) > cfg.clip) clipped += 1.0 / m;

        // d(-min(s1, s2)) / d logp_new: active only on the unclipped branch.
        double dlogp = 0.0;
        if (s1 <= s2) dlogp = -ratio * adv / m;

        std::vector<double> dmu(kActDim), dls(kActDim);
        gaussian_logprob_grads(mu, policy.log_std, act, dmu, dls);
        for (int d = 0; d < kActDim; ++d) {
          dls[d] *= dlogp;
          dmu[d] *= dlogp;
        }

        // Expert-matching term (one code path for fullreg and ppf).
        if (cfg.variant == Variant::fullreg || cfg.variant == Variant::ppf) {
          const float wi =
              (cfg.variant == Variant::fullreg) ? w0f : batch.w[i];
          if (wi != 0.0f) {
            const auto ae = batch.expert_at(i);
            double e2 = 0.0;
            for (int d = 0; d < kActDim; ++d) {
              const double e = mu[d] - ae[d];
              e2 += e * e;
              dmu[d] += 2.0 * static_cast<double>(wi) * e / m;
            }
            loss_reg += static_cast<double>(wi) * e2 / m;
          }
        }

        backward(policy.mean, cache, dmu, g_mean);
        for (int d = 0; d < kActDim; ++d) g_logstd[d] += dls[d];

        if (cfg.lipschitz_alpha > 0.0)
          lips += lipschitz_penalty(policy.mean, obs, cfg.lipschitz_eps, rng,
                                    g_lips) /
                  m;

        MlpCache vcache;
        const double v = forward(value, obs, &vcache)[0];
        const double verr = v - batch.ret[i];
        loss_v += cfg.value_coef * 0.5 * verr * verr / m;
        const std::vector<double> dv{cfg.value_coef * verr / m};
        backward(value, vcache, dv, g_value);
      }

      if (cfg.lipschitz_alpha > 0.0) {
        const double scale = cfg.lipschitz_alpha / m;
        for (size_t j = 0; j < g_mean.size(); ++j)
          g_mean[j] += scale * g_lips[j];
      }

      const double total_loss =
          loss_pi + loss_v + loss_reg + cfg.lipschitz_alpha * lips;
      if (!std::isfinite(total_loss)) {
        policy.mean.params = mean_snapshot;
        policy.log_std = logstd_snapshot;
        value.params = value_snapshot;
        throw std::runtime_error("ppo: non-finite loss, update rolled back");
      }

      double norm_sq = 0.0;
      for (double g : g_mean) norm_sq += g * g;
      for (double g : g_logstd) norm_sq += g * g;
      for (double g : g_value) norm_sq += g * g;
      const double norm = std::sqrt(norm_sq);
      if (norm > cfg.grad_clip) {
        const double s = cfg.grad_clip / norm;
        for (double& g : g_mean) g *= s;
        for (double& g : g_logstd) g *= s;
        for (double& g : g_value) g *= s;
      }
      state.opt_mean.step(policy.mean.params, g_mean);
      state.opt_logstd.step(policy.log_std, g_logstd);
      state.opt_value.step(value.params, g_value);

      stats.policy_loss += loss_pi;
      stats.value_loss += loss_v;
      stats.reg_loss += loss_reg;
      stats.lipschitz += lips;
      stats.kl += kl;
      stats.clip_frac += clipped;
      stats.grad_norm += norm;
      ++stat_batches;
    }
  }
  if (stat_batches > 0) {
    stats.policy_loss /= stat_batches;
    stats.value_loss /= stat_batches;
    stats.reg_loss /= stat_batches;
    stats.lipschitz /= stat_batches;
    stats.kl /= stat_batches;
    stats.clip_frac /= stat_batches;
    stats.grad_norm /= stat_batches;
  }
  if (!policy.finite() || !value.finite()) {
    policy.mean.params = mean_snapshot;
    policy.log_std = logstd_snapshot;
    value.params = value_snapshot;
    throw std::runtime_error("ppo: non-finite parameters, update rolled back");
  }
  return stats;
}

// ---------------------------------------------------------------------------
// Distillation stage
// ---------------------------------------------------------------------------

struct DaggerIterStats {
  int iteration = 0;
  double beta = 0.0;
  double loss = 0.0;       // mean squared action error over the passes
  int64_t buffer_size = 0;
};

struct DaggerResult {
  Checkpoint checkpoint;
  std::vector<DaggerIterStats> curve;
};

// Rolls out a mixture of expert and policy-mean actions, labels every
// visited state with the expert, aggregates into a capped buffer, and
// regresses the policy mean onto the labels.
inline DaggerResult dagger_pretrain(const TrainConfig& cfg,
                                    const EnvConfig& env_cfg,
                                    uint64_t seed) {
  cfg.validate();
  env_cfg.validate();
  const int obs_dim = env_cfg.obs_dim();
  Rng init_rng(derive_seed(seed, 0x11));
  GaussianPolicy policy = GaussianPolicy::create(
      cfg.policy_sizes(obs_dim, kActDim), init_rng, cfg.log_std_init);
  Adam opt(policy.mean.params.size(), cfg.dagger_lr);

  EnvPool pool(env_cfg, cfg.num_envs, derive_seed(seed, 0x22));
  Rng train_rng(derive_seed(seed, 0x33));

  const int64_t cap = cfg.dagger_buffer_cap;
  std::vector<double> buf_obs;
  std::vector<double> buf_act;
  int64_t buf_n = 0;
  int64_t buf_next = 0;  // ring insertion point once at capacity

  const int per_env = (cfg.dagger_samples + cfg.num_envs - 1) / cfg.num_envs;

  DaggerResult result;
  std::vector<double> grad(policy.mean.params.size());

  for (int iter = 0; iter < cfg.dagger_iterations; ++iter) {
    const double beta = std::pow(0.5, iter);

    // Collect and label.
    for (int e = 0; e < pool.size(); ++e) {
      for (int t = 0; t < per_env; ++t) {
        const Transition& cur = pool.current(e);
        const std::vector<double> obs = cur.observation;
        const Action expert = cur.info.expert;
        Action a = expert;
        if (!pool.rng(e).bernoulli(beta)) {
          const std::vector<double> mu = forward(policy.mean, obs);
          a = Action::from_array({mu[0], mu[1], mu[2], mu[3]});
        }
        // Aggregate (state, expert label).
        const int64_t slot = (buf_n < cap) ? buf_n : buf_next;
        if (buf_n < cap) {
          buf_obs.insert(buf_obs.end(), obs.begin(), obs.end());
          const auto ea = expert.to_array();
          buf_act.insert(buf_act.end(), ea.begin(), ea.end());
          ++buf_n;
        } else {
          std::copy(obs.begin(), obs.end(),
                    buf_obs.begin() + slot * obs_dim);
          const auto ea = expert.to_array();
          std::copy(ea.begin(), ea.end(), buf_act.begin() + slot * kActDim);
          buf_next = (buf_next + 1) % cap;
        }
        pool.step_env(e, a);
      }
    }

    // Regress the mean network onto the aggregated labels.
    double loss_sum = 0.0;
    int64_t loss_count = 0;
    std::vector<int64_t> order(buf_n);
    for (int64_t i = 0; i < buf_n; ++i) order[i] = i;
    for (int pass = 0; pass < cfg.dagger_passes; ++pass) {
      for (int64_t i = buf_n - 1; i > 0; --i) {
        const int64_t j =
            static_cast<int64_t>(train_rng.uniform() * (i + 1));
        std::swap(order[i], order[j]);
      }
      for (int64_t lo = 0; lo < buf_n; lo += cfg.dagger_minibatch) {
        const int64_t hi = std::min<int64_t>(lo + cfg.dagger_minibatch, buf_n);
        const int64_t m = hi - lo;
        std::fill(grad.begin(), grad.end(), 0.0);
        double loss = 0.0;
        for (int64_t k = lo; k < hi; ++k) {
          const int64_t i = order[k];
          MlpCache cache;
          const std::span<const double> obs{
              buf_obs.data() + i * obs_dim, static_cast<size_t>(obs_dim)};
          const std::vector<double> mu = forward(policy.mean, obs, &cache);
          std::vector<double> dmu(kActDim);
          for (int d = 0; d < kActDim; ++d) {
            const double e = mu[d] - buf_act[i * kActDim + d];
            loss += e * e / m;
            dmu[d] = 2.0 * e / m;
          }
          backward(policy.mean, cache, dmu, grad);
        }
        if (!std::isfinite(loss))
          throw std::runtime_error(
              "dagger: non-finite regression loss at iteration " +
              std::to_string(iter));
        opt.step(policy.mean.params, grad);
        loss_sum += loss;
        ++loss_count;
      }
    }

    DaggerIterStats st;
    st.iteration = iter;
    st.beta = beta;
    st.loss = loss_count ? loss_sum / loss_count : 0.0;
    st.buffer_size = buf_n;
    result.curve.push_back(st);
  }

  result.checkpoint.policy = policy;
  result.checkpoint.has_value = false;
  result.checkpoint.iteration = cfg.dagger_iterations;
  result.checkpoint.seed = seed;
  result.checkpoint.variant = "dagger";
  return result;
}

// Held-out on-policy action error: runs the policy mean in fresh
// environments and reports the mean absolute expert-action error per
// dimension.
inline std::array<double, kActDim> dagger_validate(
    const GaussianPolicy& policy, const EnvConfig& env_cfg, uint64_t seed,
    int samples) {
  EnvPool pool(env_cfg, 4, derive_seed(seed, 0x44));
  std::array<double, kActDim> err{};
  int n = 0;
  while (n < samples) {
    for (int e = 0; e < pool.size() && n < samples; ++e) {
      const Transition& cur = pool.current(e);
      const std::vector<double> mu = forward(policy.mean, cur.observation);
      const auto ae = cur.info.expert.to_array();
      for (int d = 0; d < kActDim; ++d) err[d] += std::abs(mu[d] - ae[d]);
      ++n;
      pool.step_env(e, Action::from_array({mu[0], mu[1], mu[2], mu[3]}));
    }
  }
  for (double& v : err) v /= n;
  return err;
}

// ---------------------------------------------------------------------------
// Fine-tuning stage
// ---------------------------------------------------------------------------

struct IterationRow {
  int iteration = 0;
  int64_t env_steps = 0;
  double mean_return = 0.0;
  double mean_ep_len = 0.0;
  int episodes = 0;
  double lin_track = 0.0;
  double ang_track = 0.0;
  double mean_w = 0.0;
  double reg_loss = 0.0;
  double lipschitz = 0.0;
  double terrain_level = 0.0;
  double vx_cap = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double kl = 0.0;
  double clip_frac = 0.0;
  double sigma_mean = 0.0;
  double grad_norm = 0.0;
};

inline const std::vector<std::string>& metrics_columns() {
  static const std::vector<std::string> cols{
      "iteration",  "env_steps", "mean_return", "mean_ep_len", "episodes",
      "lin_track",  "ang_track", "mean_w",      "reg_loss",    "lipschitz",
      "terrain_level", "vx_cap", "policy_loss", "value_loss",  "kl",
      "clip_frac",  "sigma_mean", "grad_norm"};
  return cols;
}

inline std::vector<std::string> metrics_cells(const IterationRow& r) {
  return {cell(r.iteration),  cell(r.env_steps),   cell(r.mean_return),
          cell(r.mean_ep_len), cell(r.episodes),   cell(r.lin_track),
          cell(r.ang_track),  cell(r.mean_w),      cell(r.reg_loss),
          cell(r.lipschitz),  cell(r.terrain_level), cell(r.vx_cap),
          cell(r.policy_loss), cell(r.value_loss), cell(r.kl),
          cell(r.clip_frac),  cell(r.sigma_mean),  cell(r.grad_norm)};
}

struct FinetuneResult {
  Checkpoint checkpoint;
  std::vector<IterationRow> metrics;
  bool aborted = false;
  std::string abort_reason;
};

// PPO fine-tuning loop. `init` is required for ifm/fullreg/ppf and forbidden
// for purerl. Writes per-iteration metrics to `metrics_path` when non-empty.
inline FinetuneResult finetune(const TrainConfig& cfg,
                               const EnvConfig& env_cfg,
                               const std::optional<Checkpoint>& init,
                               uint64_t seed,
                               const std::string& metrics_path = "") {
  cfg.validate();
  env_cfg.validate();
  const int obs_dim = env_cfg.obs_dim();

  if (cfg.variant == Variant::purerl && init.has_value())
    throw std::invalid_argument("purerl does not take a pretrained init");
  if (cfg.variant != Variant::purerl && !init.has_value())
    throw std::invalid_argument(std::string(to_string(cfg.variant)) +
                                " requires a pretrained init");

  Rng init_rng(derive_seed(seed, 0x55));
  GaussianPolicy policy;
  if (init.has_value()) {
    policy = init->policy;
    if (policy.obs_dim() != obs_dim || policy.act_dim() != kActDim)
      throw std::invalid_argument(
          "init checkpoint architecture does not match the environment");
  } else {
    policy = GaussianPolicy::create(cfg.policy_sizes(obs_dim, kActDim),
                                    init_rng, cfg.log_std_init);
  }
  Mlp value = (init.has_value() && init->has_value)
                  ? init->value
                  : Mlp::random(cfg.value_sizes(obs_dim), init_rng);

  PpoState state(policy, value, cfg.lr);
  EnvPool pool(env_cfg, cfg.num_envs, derive_seed(seed, 0x66));
  Rng update_rng(derive_seed(seed, 0x77));

  std::optional<CsvWriter> csv;
  if (!metrics_path.empty()) csv.emplace(metrics_path, metrics_columns());

  FinetuneResult result;
  Checkpoint last_good;
  last_good.policy = policy;
  last_good.has_value = true;
  last_good.value = value;
  last_good.seed = seed;
  last_good.variant = to_string(cfg.variant);

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    RolloutBatch batch =
        collect_rollouts(policy, value, pool, cfg.horizon, cfg.workers);
    compute_batch_gae(batch, cfg.gamma, cfg.lam);

    UpdateStats st;
    try {
      st = ppo_update(batch, policy, value, state, cfg, env_cfg.mar,
                      update_rng);
    } catch (const std::exception& ex) {
      result.aborted = true;
      result.abort_reason = ex.what();
      break;
    }

    IterationRow row;
    row.iteration = iter;
    row.env_steps = static_cast<int64_t>(iter + 1) * batch.n();
    row.episodes = static_cast<int>(batch.finished_returns.size());
    double ret = 0.0, len = 0.0;
    for (double r : batch.finished_returns) ret += r;
    for (int l : batch.finished_lengths) len += l;
    row.mean_return = row.episodes ? ret / row.episodes : 0.0;
    row.mean_ep_len = row.episodes ? len / row.episodes : 0.0;
    row.lin_track = batch.sum_lin_term / batch.n();
    row.ang_track = batch.sum_ang_term / batch.n();
    double wsum = 0.0;
    for (float w : batch.w) wsum += static_cast<double>(w);
    row.mean_w = wsum / batch.n();
    row.reg_loss = st.reg_loss;
    row.lipschitz = st.lipschitz;
    row.terrain_level = batch.mean_terrain_level;
    row.vx_cap = batch.mean_vx_cap;
    row.policy_loss = st.policy_loss;
    row.value_loss = st.value_loss;
    row.kl = st.kl;
    row.clip_frac = st.clip_frac;
    double sig = 0.0;
    for (float ls : policy.log_std) sig += std::exp(static_cast<double>(ls));
    row.sigma_mean = sig / policy.log_std.size();
    row.grad_norm = st.grad_norm;
    result.metrics.push_back(row);
    if (csv) {
      csv->row(metrics_cells(row));
      csv->flush();
    }

    last_good.policy = policy;
    last_good.value = value;
    last_good.iteration = static_cast<uint64_t>(iter + 1);
  }

  result.checkpoint = last_good;
  return result;
}

}  // namespace ppf

#endif  // PPF_TRAINER_HPP_
