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

// Batch experiment front end: pretrain / finetune / eval / compare /
// expert-demo. Every run directory receives the effective config, the seed,
// a version stamp, and the produced CSVs and checkpoints, which is enough to
// reproduce the run exactly.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ppf/config.hpp"
#include "ppf/evalkit.hpp"
#include "ppf/trainer.hpp"
#include "ppf/version.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  int64_t seed_override = -1;
  int workers = 0;  // 0: use PPF_WORKERS or 1
};

int resolve_workers(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("PPF_WORKERS")) {
    const int w = std::atoi(env);
    if (w > 0) return w;
  }
  return 1;
}

ppf::RunConfig load_run_config(const CommonOpts& opts) {
  ppf::RunConfig cfg = opts.config_path.empty()
                           ? ppf::RunConfig{}
                           : ppf::parse_config(opts.config_path);
  if (opts.seed_override >= 0)
    cfg.seed = static_cast<uint64_t>(opts.seed_override);
  cfg.train.workers = resolve_workers(opts.workers);
  return cfg;
}

void prepare_run_dir(const ppf::RunConfig& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::ofstream cfg_out(fs::path(out_dir) / "config.ini", std::ios::binary);
  cfg_out << ppf::echo_config(cfg);
  std::ofstream ver(fs::path(out_dir) / "VERSION", std::ios::binary);
  ver << ppf::kVersion << "\n";
}

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_out = true) {
  cmd->add_option("--config", opts.config_path, "config file (INI)")
      ->check(CLI::ExistingFile);
  if (with_out)
    cmd->add_option("--out", opts.out_dir, "output directory")->required();
  cmd->add_option("--seed", opts.seed_override,
                  "seed override (wins over the config)");
  cmd->add_option("--workers", opts.workers,
                  "parallel rollout/eval workers (PPF_WORKERS fallback)");
}

void write_dagger_outputs(const std::string& out_dir,
                          const ppf::DaggerResult& res,
                          const std::array<double, ppf::kActDim>& val_err) {
  ppf::save_checkpoint((fs::path(out_dir) / "policy.ckpt").string(),
                       res.checkpoint);
  ppf::CsvWriter curve((fs::path(out_dir) / "dagger_curve.csv").string(),
                       {"iteration", "beta", "loss", "buffer_size"});
  for (const auto& it : res.curve)
    curve.row({ppf::cell(it.iteration), ppf::cell(it.beta), ppf::cell(it.loss),
               ppf::cell(static_cast<int64_t>(it.buffer_size))});
  ppf::CsvWriter val((fs::path(out_dir) / "dagger_validation.csv").string(),
                     {"dimension", "mean_abs_error"});
  const char* dims[] = {"px", "py", "dz", "dyaw"};
  for (int d = 0; d < ppf::kActDim; ++d)
    val.row({dims[d], ppf::cell(val_err[d])});
}

int cmd_pretrain(const CommonOpts& opts) {
  ppf::RunConfig cfg = load_run_config(opts);
  prepare_run_dir(cfg, opts.out_dir);
  const ppf::DaggerResult res =
      ppf::dagger_pretrain(cfg.train, cfg.env, cfg.seed);
  const auto val_err = ppf::dagger_validate(
      res.checkpoint.policy, cfg.env, ppf::derive_seed(cfg.seed, 0x1234), 2048);
  write_dagger_outputs(opts.out_dir, res, val_err);
  std::printf("pretrain done: %d iterations, final loss %g\n",
              cfg.train.dagger_iterations,
              res.curve.empty() ? 0.0 : res.curve.back().loss);
  return 0;
}

int cmd_finetune(const CommonOpts& opts, const std::string& variant,
                 const std::string& init_path) {
  ppf::RunConfig cfg = load_run_config(opts);
  cfg.train.variant = ppf::parse_variant(variant);

  // Consistency between the variant and the init checkpoint is checked
  // before any compute happens.
  if (cfg.train.variant == ppf::Variant::purerl && !init_path.empty())
    throw std::invalid_argument("purerl does not take --init");
  if (cfg.train.variant != ppf::Variant::purerl && init_path.empty())
    throw std::invalid_argument(variant + " requires --init CKPT");

  std::optional<ppf::Checkpoint> init;
  if (!init_path.empty()) init = ppf::load_checkpoint(init_path);

  prepare_run_dir(cfg, opts.out_dir);
  const std::string metrics_path =
      (fs::path(opts.out_dir) / "metrics.csv").string();
  ppf::FinetuneResult res =
      ppf::finetune(cfg.train, cfg.env, init, cfg.seed, metrics_path);
  res.checkpoint.variant = variant;
  ppf::save_checkpoint((fs::path(opts.out_dir) / "final.ckpt").string(),
                       res.checkpoint);
  if (res.aborted) {
    std::fprintf(stderr,
                 "error: finetune aborted (%s); last good checkpoint saved\n",
                 res.abort_reason.c_str());
    return 1;
  }
  std::printf("finetune done: %d iterations, variant %s\n",
              cfg.train.iterations, variant.c_str());
  return 0;
}

int cmd_eval(const CommonOpts& opts, const std::string& ckpt_path,
             const std::string& scenario_str, int seeds_flag) {
  ppf::RunConfig cfg = load_run_config(opts);
  if (!scenario_str.empty()) cfg.eval_scenario = scenario_str;
  if (seeds_flag > 0) cfg.eval_seeds = seeds_flag;
  prepare_run_dir(cfg, opts.out_dir);

  const ppf::Scenario sc = ppf::Scenario::parse(cfg.eval_scenario);
  const ppf::Controller ctrl =
      ckpt_path.empty() ? ppf::Controller::expert()
                        : ppf::Controller::from_checkpoint_file(ckpt_path);
  const std::string label = ckpt_path.empty() ? "mbc" : "policy";

  const std::vector<ppf::EvalEpisode> eps = ppf::run_eval(
      ctrl, sc, cfg.eval_seeds, cfg.env, cfg.seed, cfg.train.workers);

  ppf::write_episodes_csv((fs::path(opts.out_dir) / "episodes.csv").string(),
                          label, sc, eps);
  std::vector<double> weights;
  for (const auto& ep : eps)
    for (const auto& p : ep.trajectory) weights.push_back(p.w_mar);
  ppf::write_histogram_csv(
      (fs::path(opts.out_dir) / "histogram.csv").string(), label,
      ppf::weight_histogram(weights, cfg.env.mar.w0));
  ppf::write_scatter_csv(
      (fs::path(opts.out_dir) / "scatter.csv").string(),
      {ppf::violation_error_scatter(label, eps, cfg.env.control_dt)});
  for (const auto& ep : eps) {
    char name[64];
    std::snprintf(name, sizeof(name), "trajectory_%llu.csv",
                  static_cast<unsigned long long>(ep.metrics.seed));
    ppf::write_trajectory_csv((fs::path(opts.out_dir) / name).string(),
                              ep.trajectory);
  }

  int successes = 0;
  double err = 0.0;
  for (const auto& ep : eps) {
    successes += ep.metrics.success ? 1 : 0;
    err += ep.metrics.track_err.value;
  }
  std::printf("eval %s on %s: success %d/%d, mean track err %g%s\n",
              label.c_str(), sc.name().c_str(), successes, cfg.eval_seeds,
              err / cfg.eval_seeds,
              eps[0].metrics.track_err.absolute ? " m/s" : " %");
  return 0;
}

std::vector<ppf::ManifestEntry> parse_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read manifest: " + path);
  std::vector<ppf::ManifestEntry> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = ppf::detail::trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected name = checkpoint-or-expert");
    entries.push_back({ppf::detail::trim(t.substr(0, eq)),
                       ppf::detail::trim(t.substr(eq + 1))});
  }
  if (entries.empty())
    throw std::runtime_error(path + ": empty manifest");
  return entries;
}

int cmd_compare(const CommonOpts& opts, const std::string& manifest_path,
                int seeds_flag) {
  ppf::RunConfig cfg = load_run_config(opts);
  if (seeds_flag > 0) cfg.eval_seeds = seeds_flag;
  prepare_run_dir(cfg, opts.out_dir);
  const auto manifest = parse_manifest(manifest_path);
  const ppf::ComparisonResult cmp =
      ppf::compare_variants(manifest, cfg.env, cfg.eval_seeds, cfg.seed,
                            cfg.train.workers);
  ppf::write_comparison_csv(
      (fs::path(opts.out_dir) / "comparison.csv").string(), cmp);
  for (const std::string& miss : cmp.missing)
    std::fprintf(stderr, "warning: missing artifact: %s\n", miss.c_str());
  std::printf("compare done: %zu rows, %zu missing\n", cmp.rows.size(),
              cmp.missing.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string("ppfwalk ") + ppf::kVersion +
               " - reduced-order biped walking: distill, fine-tune, evaluate"};
  app.require_subcommand(1);

  CommonOpts pre_opts;
  CLI::App* pre = app.add_subcommand("pretrain", "distill the step expert");
  add_common(pre, pre_opts);

  CommonOpts fin_opts;
  std::string variant, init_path;
  CLI::App* fin = app.add_subcommand("finetune", "policy-gradient fine-tuning");
  add_common(fin, fin_opts);
  fin->add_option("--variant", variant, "purerl | ifm | fullreg | ppf")
      ->required();
  fin->add_option("--init", init_path, "pretrained checkpoint");

  CommonOpts ev_opts;
  std::string ckpt_path, scenario;
  int seeds_flag = 0;
  CLI::App* ev = app.add_subcommand("eval", "run a controller on a scenario");
  add_common(ev, ev_opts);
  ev->add_option("--ckpt", ckpt_path,
                 "policy checkpoint (omit to run the model-based expert)");
  ev->add_option("--scenario", scenario,
                 "flat[:vx] | slope:deg | uneven:level | sequence");
  ev->add_option("--seeds", seeds_flag, "number of evaluation seeds");

  CommonOpts cm_opts;
  std::string manifest_path;
  int cm_seeds = 0;
  CLI::App* cm = app.add_subcommand("compare", "multi-controller comparison");
  add_common(cm, cm_opts);
  cm->add_option("--manifest", manifest_path,
                 "file of `name = ckpt-or-expert` lines")
      ->required()
      ->check(CLI::ExistingFile);
  cm->add_option("--seeds", cm_seeds, "seeds per scenario");

  CommonOpts xd_opts;
  std::string xd_scenario = "flat:0.6";
  int xd_seeds = 1;
  CLI::App* xd = app.add_subcommand("expert-demo",
                                    "run the model-based expert directly");
  add_common(xd, xd_opts);
  xd->add_option("--scenario", xd_scenario,
                 "flat[:vx] | slope:deg | uneven:level | sequence");
  xd->add_option("--seeds", xd_seeds, "number of episodes");

  CLI11_PARSE(app, argc, argv);

  try {
    if (pre->parsed()) return cmd_pretrain(pre_opts);
    if (fin->parsed()) return cmd_finetune(fin_opts, variant, init_path);
    if (ev->parsed()) return cmd_eval(ev_opts, ckpt_path, scenario, seeds_flag);
    if (cm->parsed()) return cmd_compare(cm_opts, manifest_path, cm_seeds);
    if (xd->parsed()) return cmd_eval(xd_opts, "", xd_scenario, xd_seeds);
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 1;
  }
  return 0;
}
