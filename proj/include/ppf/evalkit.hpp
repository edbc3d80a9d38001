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

// Evaluation harness: scenario construction, deterministic policy/expert
// rollouts with mean actions, tracking-error and robustness metrics,
// assumption-weight histograms, violation-error scatter series, and the
// multi-controller comparison table.

#ifndef PPF_EVALKIT_HPP_
#define PPF_EVALKIT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ppf/csv.hpp"
#include "ppf/env.hpp"
#include "ppf/nn.hpp"
#include "ppf/parallel.hpp"
#include "ppf/terrain.hpp"

namespace ppf {

struct Scenario {
  enum class Type { flat, slope, uneven, sequence };
  Type type = Type::flat;
  double param = 0.0;   // slope angle in degrees, or uneven level
  double cmd_vx = 0.6;  // forward command
  double flat_duration = 15.0;
  double traverse_distance = 5.0;  // slope/uneven success distance
  double time_limit_factor = 1.5;  // limit = factor * distance / command

  // Accepted forms: "flat", "flat:<vx>", "slope:<deg>", "uneven:<level>",
  // "sequence".
  static Scenario parse(const std::string& s) {
    Scenario sc;
    const auto colon = s.find(':');
    const std::string head = s.substr(0, colon);
    const std::string arg =
        colon == std::string::npos ? "" : s.substr(colon + 1);
    auto num = [&](double fallback) {
      if (arg.empty()) return fallback;
      size_t used = 0;
      const double v = std::stod(arg, &used);
      if (used != arg.size())
        throw std::invalid_argument("scenario: bad number in " + s);
      return v;
    };
    if (head == "flat") {
      sc.type = Type::flat;
      sc.cmd_vx = num(0.6);
    } else if (head == "slope") {
      sc.type = Type::slope;
      sc.param = num(14.0);
      if (sc.param < -kMaxSlopeDeg || sc.param > kMaxSlopeDeg)
        throw std::invalid_argument("scenario: slope angle beyond terrain cap");
    } else if (head == "uneven") {
      sc.type = Type::uneven;
      sc.param = num(0.8);
      if (sc.param < 0.0 || sc.param > 1.0)
        throw std::invalid_argument("scenario: uneven level in [0,1]");
    } else if (head == "sequence") {
      sc.type = Type::sequence;
    } else {
      throw std::invalid_argument("unknown scenario: " + s);
    }
    return sc;
  }

  std::string name() const {
    char buf[48];
    switch (type) {
      case Type::flat:
        std::snprintf(buf, sizeof(buf), "flat:%g", cmd_vx);
        return buf;
      case Type::slope:
        std::snprintf(buf, sizeof(buf), "slope:%g", param);
        return buf;
      case Type::uneven:
        std::snprintf(buf, sizeof(buf), "uneven:%g", param);
        return buf;
      case Type::sequence:
        return "sequence";
    }
    return "?";
  }
};

// The sequenced arena: a flat lead-in followed by graded segments of
// increasing difficulty. "Terrain level reached" is the index of the last
// fully traversed segment.
inline constexpr double kSequenceLeadIn = 2.0;
inline constexpr double kSequenceSegment = 3.0;

struct SequenceSpec {
  TerrainKind kind;
  double level;
};

inline const std::vector<SequenceSpec>& sequence_segments() {
  static const std::vector<SequenceSpec> segs{
      {TerrainKind::uphill, 1.0 / 3.0},   {TerrainKind::uneven_a, 1.0 / 3.0},
      {TerrainKind::downhill, 2.0 / 3.0}, {TerrainKind::uneven_b, 2.0 / 3.0},
      {TerrainKind::uphill, 1.0},         {TerrainKind::uneven_b, 1.0}};
  return segs;
}

inline TerrainMap scenario_terrain(const Scenario& sc, uint64_t seed) {
  switch (sc.type) {
    case Scenario::Type::flat:
      return TerrainMap::single(generate_terrain(TerrainKind::flat, 0.0, seed));
    case Scenario::Type::slope: {
      const double level = std::abs(sc.param) / kMaxSlopeDeg;
      const TerrainKind kind =
          sc.param >= 0.0 ? TerrainKind::uphill : TerrainKind::downhill;
      return TerrainMap::single(generate_terrain(kind, level, seed));
    }
    case Scenario::Type::uneven:
      return TerrainMap::single(
          generate_terrain(TerrainKind::uneven_b, sc.param, seed));
    case Scenario::Type::sequence: {
      std::vector<std::pair<double, TerrainField>> segs;
      segs.emplace_back(0.0, generate_terrain(TerrainKind::flat, 0.0, seed));
      double x = kSequenceLeadIn;
      int i = 0;
      for (const SequenceSpec& s : sequence_segments()) {
        segs.emplace_back(x, generate_terrain(s.kind, s.level,
                                              derive_seed(seed, 0x5e0 + i)));
        x += kSequenceSegment;
        ++i;
      }
      return TerrainMap::sequence(segs);
    }
  }
  throw std::logic_error("unreachable scenario type");
}

inline double scenario_time_limit(const Scenario& sc) {
  switch (sc.type) {
    case Scenario::Type::flat:
      return sc.flat_duration;
    case Scenario::Type::slope:
    case Scenario::Type::uneven:
      return sc.time_limit_factor * sc.traverse_distance / sc.cmd_vx;
    case Scenario::Type::sequence: {
      const double total =
          kSequenceSegment * static_cast<double>(sequence_segments().size());
      return sc.time_limit_factor * total / sc.cmd_vx;
    }
  }
  return 15.0;
}

// A controller is either the model-based step expert or a policy mean.
struct Controller {
  bool is_expert = true;
  GaussianPolicy policy;

  static Controller expert() { return Controller{}; }
  static Controller from_policy(const GaussianPolicy& p) {
    Controller c;
    c.is_expert = false;
    c.policy = p;
    return c;
  }
  static Controller from_checkpoint_file(const std::string& path) {
    return from_policy(load_checkpoint(path).policy);
  }

  Action act(const Transition& cur) const {
    if (is_expert) return cur.info.expert;
    const std::vector<double> mu = forward(policy.mean, cur.observation);
    return Action::from_array({mu[0], mu[1], mu[2], mu[3]});
  }
};

struct TrackError {
  double value = 0.0;   // percent, or m/s when absolute
  bool absolute = false;
};

// Tracking measurement starts after the gait is established.
inline constexpr double kEvalWarmup = 1.0;  // s

// 100 * mean || v_xy - v_cmd || / || v_cmd || over the trajectory after the
// warmup; with a zero command the error is reported in m/s and flagged.
inline TrackError tracking_error(const std::vector<TrajPoint>& traj,
                                 const GaitCommand& cmd) {
  TrackError te;
  const double cmd_norm = std::hypot(cmd.vx, cmd.vy);
  double sum = 0.0;
  int n = 0;
  for (const TrajPoint& p : traj) {
    if (p.t < kEvalWarmup) continue;
    sum += std::hypot(p.vx - cmd.vx, p.vy - cmd.vy);
    ++n;
  }
  const double mean = n > 0 ? sum / n : 0.0;
  if (cmd_norm < 1e-9) {
    te.absolute = true;
    te.value = mean;
  } else {
    te.value = 100.0 * mean / cmd_norm;
  }
  return te;
}

struct EpisodeMetrics {
  uint64_t seed = 0;
  bool success = false;
  double distance = 0.0;       // forward distance traveled, m
  double level_reached = 0.0;  // sequence: segments crossed; else the level
  TrackError track_err;
  double ang_err = 0.0;        // mean |realized - commanded| yaw rate, rad/s
  double mean_abs_zdot = 0.0;
  double mean_w = 0.0;
  DoneReason reason = DoneReason::none;
};

struct EvalEpisode {
  EpisodeMetrics metrics;
  std::vector<TrajPoint> trajectory;
  GaitCommand cmd;
};

inline EvalEpisode run_episode(const Controller& ctrl, const Scenario& sc,
                               uint64_t seed, EnvConfig env_cfg) {
  env_cfg = env_cfg.nominal();  // evaluation uses mean actions, no noise
  env_cfg.episode_length = scenario_time_limit(sc);
  env_cfg.validate();
  BipedEnv env(env_cfg);
  env.set_record(true);
  GaitCommand cmd;
  cmd.vx = sc.cmd_vx;
  const TerrainMap terrain = scenario_terrain(sc, derive_seed(seed, 0x7e));
  Transition tr = env.reset(derive_seed(seed, 0x8f), terrain, cmd);

  double zd_sum = 0.0, w_sum = 0.0, ang_sum = 0.0;
  int ticks = 0;
  while (!tr.done) {
    tr = env.step(ctrl.act(tr));
    zd_sum += std::abs(tr.info.zdot);
    w_sum += tr.info.mar_w;
    ang_sum += std::abs(tr.info.yaw_rate_real - cmd.yaw_rate);
    ++ticks;
  }

  EvalEpisode ep;
  ep.cmd = cmd;
  ep.trajectory = env.trajectory();
  EpisodeMetrics& m = ep.metrics;
  m.seed = seed;
  m.reason = tr.reason;
  m.distance = env.sim().x_w;
  m.track_err = tracking_error(ep.trajectory, cmd);
  m.ang_err = ticks ? ang_sum / ticks : 0.0;
  m.mean_abs_zdot = ticks ? zd_sum / ticks : 0.0;
  m.mean_w = ticks ? w_sum / ticks : 0.0;

  switch (sc.type) {
    case Scenario::Type::flat:
      m.success = (tr.reason == DoneReason::timeout);
      m.level_reached = 0.0;
      break;
    case Scenario::Type::slope:
    case Scenario::Type::uneven:
      // Traverse the section within the time limit; a fall past the section
      // end still counts as a traversal.
      m.success = m.distance >= sc.traverse_distance;
      m.level_reached = sc.type == Scenario::Type::slope
                            ? std::abs(sc.param) / kMaxSlopeDeg
                            : sc.param;
      break;
    case Scenario::Type::sequence: {
      int crossed = 0;
      const int n_segs = static_cast<int>(sequence_segments().size());
      for (int i = 0; i < n_segs; ++i) {
        const double seg_end = kSequenceLeadIn + (i + 1) * kSequenceSegment;
        if (m.distance >= seg_end) ++crossed;
      }
      m.level_reached = crossed;
      m.success = (crossed == n_segs);
      break;
    }
  }
  return ep;
}

// Deterministic per seed; episodes are independent and may run in parallel.
inline std::vector<EvalEpisode> run_eval(const Controller& ctrl,
                                         const Scenario& sc, int n_seeds,
                                         const EnvConfig& env_cfg,
                                         uint64_t base_seed = 0,
                                         int workers = 1) {
  std::vector<EvalEpisode> out(n_seeds);
  parallel_for(n_seeds, workers, [&](int i) {
    out[i] = run_episode(ctrl, sc, base_seed + static_cast<uint64_t>(i),
                         env_cfg);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Assumption-weight histogram
// ---------------------------------------------------------------------------

struct Histogram {
  std::vector<double> edges;  // size bins + 1, partitioning [0, w0]
  std::vector<double> mass;   // normalized to sum 1
};

inline Histogram weight_histogram(const std::vector<double>& samples,
                                  double w0,
                                  std::vector<double> edges = {}) {
  if (samples.empty())
    throw std::invalid_argument("weight histogram: empty input");
  if (!(w0 > 0.0))
    throw std::invalid_argument("weight histogram: w0 must be > 0");
  if (edges.empty()) edges = {0.0, w0 / 3.0, 2.0 * w0 / 3.0, w0};
  if (edges.size() < 2 || edges.front() != 0.0 || edges.back() != w0 ||
      !std::is_sorted(edges.begin(), edges.end()))
    throw std::invalid_argument("weight histogram: edges must partition [0, w0]");
  Histogram h;
  h.edges = edges;
  h.mass.assign(edges.size() - 1, 0.0);
  for (double w : samples) {
    if (w < -1e-9 || w > w0 * (1.0 + 1e-9))
      throw std::invalid_argument("weight histogram: sample outside [0, w0]");
    const double wc = std::clamp(w, 0.0, w0);
    size_t bin = h.mass.size() - 1;  // top edge belongs to the last bin
    for (size_t i = 0; i + 1 < edges.size(); ++i) {
      if (wc >= edges[i] && wc < edges[i + 1]) {
        bin = i;
        break;
      }
    }
    h.mass[bin] += 1.0;
  }
  for (double& m : h.mass) m /= samples.size();
  return h;
}

// ---------------------------------------------------------------------------
// Violation-error scatter
// ---------------------------------------------------------------------------

struct ScatterPoint {
  double abs_zdot = 0.0;
  double track_err = 0.0;  // m/s, 0.5 s moving average
};

struct ScatterSeries {
  std::string label;
  std::vector<ScatterPoint> points;
  double slope = 0.0;  // least-squares err-vs-violation slope
};

inline double least_squares_slope(const std::vector<ScatterPoint>& pts) {
  if (pts.size() < 2) return 0.0;
  double mx = 0.0, my = 0.0;
  for (const auto& p : pts) {
    mx += p.abs_zdot;
    my += p.track_err;
  }
  mx /= pts.size();
  my /= pts.size();
  double sxx = 0.0, sxy = 0.0;
  for (const auto& p : pts) {
    sxx += (p.abs_zdot - mx) * (p.abs_zdot - mx);
    sxy += (p.abs_zdot - mx) * (p.track_err - my);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

// Per-tick (|zdot|, tracking error) pairs; the error channel is smoothed with
// a 0.5 s moving average to suppress per-step oscillation.
inline ScatterSeries violation_error_scatter(
    const std::string& label, const std::vector<EvalEpisode>& episodes,
    double control_dt) {
  if (episodes.empty())
    throw std::invalid_argument("scatter: no episodes");
  ScatterSeries s;
  s.label = label;
  const int win = std::max(1, static_cast<int>(std::llround(0.5 / control_dt)));
  for (const EvalEpisode& ep : episodes) {
    std::vector<double> err(ep.trajectory.size());
    for (size_t i = 0; i < ep.trajectory.size(); ++i)
      err[i] = std::hypot(ep.trajectory[i].vx - ep.cmd.vx,
                          ep.trajectory[i].vy - ep.cmd.vy);
    double acc = 0.0;
    for (size_t i = 0; i < ep.trajectory.size(); ++i) {
      acc += err[i];
      if (i >= static_cast<size_t>(win)) acc -= err[i - win];
      const TrajPoint& p = ep.trajectory[i];
      if (p.t < kEvalWarmup) continue;
      const double smoothed =
          acc / std::min<double>(win, static_cast<double>(i + 1));
      s.points.push_back({std::abs(p.zdot), smoothed});
    }
  }
  s.slope = least_squares_slope(s.points);
  return s;
}

// ---------------------------------------------------------------------------
// CSV outputs
// ---------------------------------------------------------------------------

inline void write_episodes_csv(const std::string& path,
                               const std::string& controller,
                               const Scenario& sc,
                               const std::vector<EvalEpisode>& episodes) {
  CsvWriter csv(path, {"controller", "scenario", "seed", "success", "distance",
                       "level_reached", "track_err", "track_err_absolute",
                       "ang_err", "mean_abs_zdot", "mean_w", "done_reason"});
  for (const EvalEpisode& ep : episodes) {
    const EpisodeMetrics& m = ep.metrics;
    csv.row({controller, sc.name(), cell(m.seed), m.success ? "1" : "0",
             cell(m.distance), cell(m.level_reached), cell(m.track_err.value),
             m.track_err.absolute ? "1" : "0", cell(m.ang_err),
             cell(m.mean_abs_zdot), cell(m.mean_w), to_string(m.reason)});
  }
}

inline void write_histogram_csv(const std::string& path,
                                const std::string& label, const Histogram& h) {
  CsvWriter csv(path, {"label", "region", "lo", "hi", "mass"});
  for (size_t i = 0; i < h.mass.size(); ++i)
    csv.row({label, cell(static_cast<int>(i) + 1), cell(h.edges[i]),
             cell(h.edges[i + 1]), cell(h.mass[i])});
}

inline void write_scatter_csv(const std::string& path,
                              const std::vector<ScatterSeries>& series) {
  CsvWriter csv(path, {"controller", "abs_zdot", "track_err"});
  for (const ScatterSeries& s : series)
    for (const ScatterPoint& p : s.points)
      csv.row({s.label, cell(p.abs_zdot), cell(p.track_err)});
}

// ---------------------------------------------------------------------------
// Multi-controller comparison
// ---------------------------------------------------------------------------

struct ManifestEntry {
  std::string name;        // mbc, ppf, fullreg, ifm, purerl, ...
  std::string checkpoint;  // path, or "expert" for the model-based controller
};

struct ComparisonRow {
  std::string controller;
  std::string scenario;
  double success_rate = 0.0;  // percent
  double track_err_mean = 0.0;
  bool track_err_absolute = false;
  double level_reached_mean = 0.0;
  double mean_w = 0.0;
};

struct ComparisonResult {
  std::vector<ComparisonRow> rows;
  std::vector<std::string> missing;  // manifest entries that could not load
};

inline const std::vector<Scenario>& comparison_scenarios() {
  static const std::vector<Scenario> scs{
      Scenario::parse("flat:0.6"), Scenario::parse("slope:14"),
      Scenario::parse("uneven:0.8"), Scenario::parse("sequence")};
  return scs;
}

inline ComparisonResult compare_variants(
    const std::vector<ManifestEntry>& manifest, const EnvConfig& env_cfg,
    int n_seeds, uint64_t base_seed, int workers = 1,
    const std::vector<Scenario>& scenarios = comparison_scenarios()) {
  ComparisonResult result;
  for (const ManifestEntry& entry : manifest) {
    Controller ctrl;
    if (entry.checkpoint == "expert") {
      ctrl = Controller::expert();
    } else {
      try {
        ctrl = Controller::from_checkpoint_file(entry.checkpoint);
      } catch (const std::exception&) {
        result.missing.push_back(entry.name + " (" + entry.checkpoint + ")");
        continue;
      }
    }
    for (const Scenario& sc : scenarios) {
      const std::vector<EvalEpisode> eps =
          run_eval(ctrl, sc, n_seeds, env_cfg, base_seed, workers);
      ComparisonRow row;
      row.controller = entry.name;
      row.scenario = sc.name();
      double succ = 0.0, err = 0.0, lvl = 0.0, w = 0.0;
      for (const EvalEpisode& ep : eps) {
        succ += ep.metrics.success ? 1.0 : 0.0;
        err += ep.metrics.track_err.value;
        lvl += ep.metrics.level_reached;
        w += ep.metrics.mean_w;
        row.track_err_absolute = ep.metrics.track_err.absolute;
      }
      row.success_rate = 100.0 * succ / n_seeds;
      row.track_err_mean = err / n_seeds;
      row.level_reached_mean = lvl / n_seeds;
      row.mean_w = w / n_seeds;
      result.rows.push_back(row);
    }
  }
  return result;
}

inline void write_comparison_csv(const std::string& path,
                                 const ComparisonResult& cmp) {
  CsvWriter csv(path, {"controller", "scenario", "success_rate_pct",
                       "track_err", "track_err_absolute",
                       "level_reached_mean", "mean_w"});
  for (const ComparisonRow& r : cmp.rows)
    csv.row({r.controller, r.scenario, cell(r.success_rate),
             cell(r.track_err_mean), r.track_err_absolute ? "1" : "0",
             cell(r.level_reached_mean), cell(r.mean_w)});
}

}  // namespace ppf

#endif  // PPF_EVALKIT_HPP_
