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

#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "ppf/evalkit.hpp"

namespace ppf {
namespace {

TEST(Scenario, ParseAndName) {
  EXPECT_EQ(Scenario::parse("flat").type, Scenario::Type::flat);
  EXPECT_DOUBLE_EQ(Scenario::parse("flat:0.3").cmd_vx, 0.3);
  EXPECT_DOUBLE_EQ(Scenario::parse("slope:14").param, 14.0);
  EXPECT_EQ(Scenario::parse("uneven:0.8").type, Scenario::Type::uneven);
  EXPECT_EQ(Scenario::parse("sequence").type, Scenario::Type::sequence);
  EXPECT_THROW(Scenario::parse("lava"), std::invalid_argument);
  EXPECT_THROW(Scenario::parse("slope:30"), std::invalid_argument);
  EXPECT_THROW(Scenario::parse("uneven:2"), std::invalid_argument);
  EXPECT_EQ(Scenario::parse("slope:14").name(), "slope:14");
}

TEST(Scenario, SequenceTerrainIsGradedAlongX) {
  const TerrainMap m = scenario_terrain(Scenario::parse("sequence"), 5);
  EXPECT_DOUBLE_EQ(m.level_at(1.0), 0.0);  // lead-in
  EXPECT_NEAR(m.level_at(kSequenceLeadIn + 0.5), 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(m.level_at(kSequenceLeadIn + 5 * kSequenceSegment + 0.5), 1.0,
              1e-12);
}

TEST(TrackingError, PinnedCases) {
  GaitCommand cmd;
  cmd.vx = 0.6;
  std::vector<TrajPoint> perfect;
  for (int i = 0; i < 400; ++i) {
    TrajPoint p;
    p.t = i * 0.01;
    p.vx = 0.6;
    p.vy = 0.0;
    perfect.push_back(p);
  }
  EXPECT_DOUBLE_EQ(tracking_error(perfect, cmd).value, 0.0);

  // Constant v = 0.5 * command -> 50%.
  std::vector<TrajPoint> half = perfect;
  for (auto& p : half) p.vx = 0.3;
  EXPECT_NEAR(tracking_error(half, cmd).value, 50.0, 1e-9);

  // Scale consistency: doubling both leaves the percentage unchanged.
  GaitCommand cmd2;
  cmd2.vx = 1.2;
  std::vector<TrajPoint> scaled = perfect;
  for (auto& p : scaled) p.vx = 0.6;
  EXPECT_NEAR(tracking_error(scaled, cmd2).value,
              tracking_error(half, cmd).value, 1e-9);

  // Zero command: absolute error in m/s, flagged.
  GaitCommand zero;
  const TrackError te = tracking_error(half, zero);
  EXPECT_TRUE(te.absolute);
  EXPECT_NEAR(te.value, 0.3, 1e-12);
}

TEST(RunEval, ExpertOnFlatSucceeds) {
  EnvConfig cfg;
  const Scenario sc = Scenario::parse("flat:0.3");
  const std::vector<EvalEpisode> eps =
      run_eval(Controller::expert(), sc, 3, cfg, 11);
  for (const EvalEpisode& ep : eps) {
    EXPECT_TRUE(ep.metrics.success);
    EXPECT_FALSE(ep.metrics.track_err.absolute);
    EXPECT_LT(ep.metrics.track_err.value, 10.0);
    EXPECT_GT(ep.metrics.mean_w, 4.9);  // flat keeps the assumption intact
  }
}

TEST(RunEval, DeterministicPerSeedAndParallel) {
  EnvConfig cfg;
  const Scenario sc = Scenario::parse("slope:10");
  const auto a = run_eval(Controller::expert(), sc, 3, cfg, 5, 1);
  const auto b = run_eval(Controller::expert(), sc, 3, cfg, 5, 3);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(a[i].metrics.success, b[i].metrics.success);
    EXPECT_EQ(a[i].metrics.distance, b[i].metrics.distance);
    EXPECT_EQ(a[i].metrics.track_err.value, b[i].metrics.track_err.value);
    ASSERT_EQ(a[i].trajectory.size(), b[i].trajectory.size());
  }
}

TEST(RunEval, ExpertSlopeErrorExceedsFlat) {
  EnvConfig cfg;
  const auto flat =
      run_eval(Controller::expert(), Scenario::parse("flat:0.6"), 3, cfg, 7);
  const auto slope =
      run_eval(Controller::expert(), Scenario::parse("slope:14"), 3, cfg, 7);
  double flat_err = 0.0, slope_err = 0.0;
  for (int i = 0; i < 3; ++i) {
    flat_err += flat[i].metrics.track_err.value;
    slope_err += slope[i].metrics.track_err.value;
  }
  EXPECT_GT(slope_err, flat_err);
}

TEST(RunEval, ExpertFailsOnHardRoughTerrain) {
  EnvConfig cfg;
  const auto eps =
      run_eval(Controller::expert(), Scenario::parse("uneven:1"), 5, cfg, 3);
  int fails = 0;
  for (const auto& ep : eps) fails += ep.metrics.success ? 0 : 1;
  EXPECT_GE(fails, 3);  // the kinematic leg limit defeats the fixed expert
}

TEST(WeightHistogram, MassAndRegions) {
  const double w0 = 5.0;
  // All weights at the top: mass 1 in region 3.
  Histogram top = weight_histogram(std::vector<double>(100, 5.0), w0);
  EXPECT_DOUBLE_EQ(top.mass[2], 1.0);
  // All violations severe: mass 1 in region 1.
  MarConfig mar;
  std::vector<double> severe;
  for (int i = 0; i < 50; ++i) severe.push_back(mar_weight(1.0 + 0.01 * i, mar));
  Histogram bottom = weight_histogram(severe, w0);
  EXPECT_DOUBLE_EQ(bottom.mass[0], 1.0);
  // Mass sums to one.
  Rng rng(3);
  std::vector<double> mixed;
  for (int i = 0; i < 1000; ++i)
    mixed.push_back(mar_weight(rng.uniform(0, 0.4), mar));
  Histogram h = weight_histogram(mixed, w0);
  double total = 0.0;
  for (double m : h.mass) total += m;
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_EQ(h.edges.size(), 4u);
  EXPECT_DOUBLE_EQ(h.edges.front(), 0.0);
  EXPECT_DOUBLE_EQ(h.edges.back(), w0);

  EXPECT_THROW(weight_histogram({}, w0), std::invalid_argument);
  EXPECT_THROW(weight_histogram({6.0}, w0), std::invalid_argument);
}

TEST(WeightHistogram, UphillShiftsMassDown) {
  EnvConfig cfg;
  const auto flat =
      run_eval(Controller::expert(), Scenario::parse("flat:0.6"), 3, cfg, 9);
  const auto hill =
      run_eval(Controller::expert(), Scenario::parse("slope:15"), 3, cfg, 9);
  auto weights = [](const std::vector<EvalEpisode>& eps) {
    std::vector<double> w;
    for (const auto& ep : eps)
      for (const auto& p : ep.trajectory) w.push_back(p.w_mar);
    return w;
  };
  const Histogram hf = weight_histogram(weights(flat), cfg.mar.w0);
  const Histogram hh = weight_histogram(weights(hill), cfg.mar.w0);
  EXPECT_GT(hh.mass[0], hf.mass[0]);  // more low-weight samples uphill
  EXPECT_LT(hh.mass[2], hf.mass[2]);  // fewer high-weight samples uphill
}

TEST(Scatter, PerfectTrackerHasZeroSlope) {
  EvalEpisode ep;
  ep.cmd.vx = 0.5;
  for (int i = 0; i < 300; ++i) {
    TrajPoint p;
    p.t = i * 0.01;
    p.vx = 0.5;
    p.vy = 0.0;
    p.zdot = 0.1 * std::sin(0.1 * i);
    ep.trajectory.push_back(p);
  }
  const ScatterSeries s = violation_error_scatter("perfect", {ep}, 0.01);
  for (const auto& p : s.points) EXPECT_EQ(p.track_err, 0.0);
  EXPECT_EQ(s.slope, 0.0);
}

TEST(Scatter, DeterministicAndExportable) {
  EnvConfig cfg;
  const auto a =
      run_eval(Controller::expert(), Scenario::parse("slope:14"), 2, cfg, 21);
  const ScatterSeries s1 = violation_error_scatter("mbc", a, cfg.control_dt);
  const ScatterSeries s2 = violation_error_scatter("mbc", a, cfg.control_dt);
  ASSERT_EQ(s1.points.size(), s2.points.size());
  EXPECT_EQ(s1.slope, s2.slope);
  EXPECT_GT(s1.points.size(), 100u);

  const auto path = std::filesystem::temp_directory_path() / "ppf_scatter.csv";
  write_scatter_csv(path.string(), {s1});
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "controller,abs_zdot,track_err");
  std::filesystem::remove(path);
}

TEST(Compare, ExpertOnlyManifest) {
  EnvConfig cfg;
  const std::vector<ManifestEntry> manifest{{"mbc", "expert"}};
  const std::vector<Scenario> scs{Scenario::parse("flat:0.3")};
  const ComparisonResult cmp = compare_variants(manifest, cfg, 5, 3, 1, scs);
  ASSERT_EQ(cmp.rows.size(), 1u);
  EXPECT_TRUE(cmp.missing.empty());
  EXPECT_EQ(cmp.rows[0].controller, "mbc");
  // Five seeds: the rate granularity is 20 points.
  const double r = cmp.rows[0].success_rate;
  EXPECT_NEAR(std::fmod(r, 20.0), 0.0, 1e-9);
  EXPECT_DOUBLE_EQ(r, 100.0);

  const auto path = std::filesystem::temp_directory_path() / "ppf_cmp.csv";
  write_comparison_csv(path.string(), cmp);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header,
            "controller,scenario,success_rate_pct,track_err,"
            "track_err_absolute,level_reached_mean,mean_w");
  std::filesystem::remove(path);
}

TEST(Compare, MissingArtifactsAreListedAndSkipped) {
  EnvConfig cfg;
  const std::vector<ManifestEntry> manifest{
      {"mbc", "expert"}, {"ppf", "/nonexistent/path.ckpt"}};
  const std::vector<Scenario> scs{Scenario::parse("flat:0.3")};
  const ComparisonResult cmp = compare_variants(manifest, cfg, 2, 3, 1, scs);
  ASSERT_EQ(cmp.rows.size(), 1u);
  ASSERT_EQ(cmp.missing.size(), 1u);
  EXPECT_NE(cmp.missing[0].find("ppf"), std::string::npos);
}

}  // namespace
}  // namespace ppf
