/*
 * Copyright 2026 The magslam Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// magslam command line: simulate, slam, report, map-export, presets list.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "magslam/config.hpp"
#include "magslam/io.hpp"
#include "magslam/pipeline.hpp"

namespace fs = std::filesystem;
using namespace magslam;

namespace {

enum ExitCode { kOk = 0, kInternal = 1, kConfig = 2, kData = 3, kDiverged = 4 };

std::string output_root() {
  const char *env = std::getenv("MAGSLAM_OUTPUT_ROOT");
  return env && *env ? std::string(env) : std::string("runs");
}

struct CommonArgs {
  std::string config;
  std::string preset;
  std::string motion;
  std::optional<std::uint64_t> seed;
  std::optional<int> mc;
  std::string out;
};

void add_common(CLI::App *app, CommonArgs &a) {
  app->add_option("-c,--config", a.config, "JSON run configuration")->check(CLI::ExistingFile);
  app->add_option("-p,--preset", a.preset, "scenario preset, applied after --config");
  app->add_option("--motion", a.motion,
                  "motion kind: full_rotation_in_place, wiggling_in_place, "
                  "yaw_rotation_in_place, circle_no_rotation, circle_yaw_rotation, "
                  "circle_wiggle, square_loop, snake, infinity_loop");
  app->add_option("--seed", a.seed, "master seed");
  app->add_option("--mc", a.mc, "number of Monte Carlo replicates");
  app->add_option("-o,--out", a.out,
                  "output directory (default: $MAGSLAM_OUTPUT_ROOT/<command>, else runs/<command>)");
}

RunConfig build_config(const CommonArgs &a) {
  RunConfig cfg = a.config.empty() ? RunConfig{} : load_config(a.config);
  if (!a.preset.empty()) {
    apply_preset(find_preset(a.preset), cfg);
  }
  if (!a.motion.empty()) {
    try {
      cfg.motion.kind = parse_motion(a.motion);
    } catch (const std::invalid_argument &e) {
      throw ConfigError(std::string("motion.kind: ") + e.what());
    }
  }
  if (a.seed) {
    cfg.seed = *a.seed;
  }
  if (a.mc) {
    cfg.mc = *a.mc;
  }
  return cfg;
}

std::string resolve_out(const CommonArgs &a, const RunConfig &cfg, const std::string &cmd) {
  if (!a.out.empty()) {
    return a.out;
  }
  if (!cfg.output.empty()) {
    return cfg.output;
  }
  return (fs::path(output_root()) / cmd).string();
}

std::string replicate_dir(const std::string &out, int mc, int r) {
  return mc == 1 ? out : (fs::path(out) / fmt::format("rep_{:03d}", r)).string();
}

int cmd_simulate(const CommonArgs &a) {
  RunConfig cfg = build_config(a);
  cfg.validate();
  const std::string out = resolve_out(a, cfg, "simulate");
  for (int r = 0; r < cfg.mc; ++r) {
    const SimulatedScenario sim = simulate_scenario(cfg, r);
    const std::string dir = replicate_dir(out, cfg.mc, r);
    write_dataset(sim.data, dir);
    fmt::print("{} motion={} seed={} replicate={} steps={} sensors={}\n", dir,
               motion_name(cfg.motion.kind), cfg.seed, r, sim.data.n_steps(),
               sim.data.layout.n_mag());
  }
  return kOk;
}

void print_summary(const std::string &dir, const nlohmann::json &s) {
  std::string line = fmt::format("{} mode={}", dir, s.value("mode", ""));
  if (s.contains("error")) {
    line += fmt::format(" final_pos_err={:.4f}m", s["error"]["final_position_m"].get<double>());
  }
  if (s.contains("drift_reduction") && s["drift_reduction"].is_object()) {
    line += fmt::format(" drift_reduction={:.1f}%",
                        s["drift_reduction"]["final_pct"].get<double>());
  }
  line += fmt::format(" max_iterations={}", s.value("max_iterations", 0));
  if (s.value("diverged", false)) {
    line += fmt::format(" DIVERGED at step {}: {}", s["divergence_step"].get<int>(),
                        s.value("divergence_reason", ""));
  }
  fmt::print("{}\n", line);
}

struct SlamArgs {
  std::string data;
  std::string mode;
  bool no_precalibrate = false;
  std::optional<int> single_mag_index;
  std::optional<int> n_modes;
};

int cmd_slam(const CommonArgs &a, const SlamArgs &s) {
  RunConfig cfg = build_config(a);
  if (!s.mode.empty()) {
    cfg.mode = parse_mode(s.mode);
  }
  if (s.no_precalibrate) {
    cfg.precalibrate = false;
  }
  if (s.single_mag_index) {
    cfg.single_mag_index = *s.single_mag_index;
  }
  if (s.n_modes) {
    cfg.n_se_modes = *s.n_modes;
  }
  cfg.validate();
  const std::string out = resolve_out(a, cfg, "slam");
  bool diverged = false;
  if (!s.data.empty()) {
    const Dataset raw = read_dataset(s.data);
    const RunOutcome run = run_mode(cfg, raw);
    const auto summary = export_run(cfg, run, out, fs::absolute(s.data).string());
    print_summary(out, summary);
    diverged = run.diverged();
  } else {
    for (int r = 0; r < cfg.mc; ++r) {
      const std::string dir = replicate_dir(out, cfg.mc, r);
      const SimulatedScenario sim = simulate_scenario(cfg, r);
      const std::string ds_dir = (fs::path(dir) / "dataset").string();
      write_dataset(sim.data, ds_dir);
      const RunOutcome run = run_mode(cfg, sim.data);
      const auto summary = export_run(cfg, run, dir, fs::absolute(ds_dir).string());
      print_summary(dir, summary);
      diverged = diverged || run.diverged();
    }
  }
  return diverged ? kDiverged : kOk;
}

std::vector<std::string> collect_runs(const std::vector<std::string> &inputs) {
  std::vector<std::string> runs;
  for (const auto &in : inputs) {
    if (fs::exists(fs::path(in) / "summary.json")) {
      runs.push_back(in);
      continue;
    }
    if (!fs::is_directory(in)) {
      throw DataError(in + ": not a run directory");
    }
    std::vector<std::string> found;
    for (const auto &e : fs::recursive_directory_iterator(in)) {
      if (e.is_regular_file() && e.path().filename() == "summary.json" &&
          fs::exists(e.path().parent_path() / "trajectory.csv")) {
        found.push_back(e.path().parent_path().string());
      }
    }
    if (found.empty()) {
      throw DataError(in + ": no completed runs found");
    }
    std::sort(found.begin(), found.end());
    runs.insert(runs.end(), found.begin(), found.end());
  }
  return runs;
}

int cmd_presets(bool as_json) {
  if (as_json) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto &p : scenario_presets()) {
      arr.push_back({{"name", p.name},
                     {"label", p.label},
                     {"time_s", p.time_s},
                     {"length_m", p.length_m},
                     {"length_scale", p.length_scale},
                     {"sigma_se_over_l", p.sigma_se_over_l},
                     {"sigma_pos_mm_s", {p.sigma_pos_mm_s.x(), p.sigma_pos_mm_s.y(),
                                         p.sigma_pos_mm_s.z()}},
                     {"sigma_rot_deg_s", {p.sigma_rot_deg_s.x(), p.sigma_rot_deg_s.y(),
                                          p.sigma_rot_deg_s.z()}},
                     {"o_pos_mm_s", {p.o_pos_mm_s.x(), p.o_pos_mm_s.y(), p.o_pos_mm_s.z()}},
                     {"o_rot_deg_s", {p.o_rot_deg_s.x(), p.o_rot_deg_s.y(), p.o_rot_deg_s.z()}},
                     {"motion", motion_name(p.motion.kind)}});
    }
    fmt::print("{}\n", arr.dump(2));
    return kOk;
  }
  fmt::print("{:<16} {:<16} {:>7} {:>8} {:>6} {:>6}  {:<20} {:<16} {}\n", "name", "label",
             "time_s", "length_m", "l", "sse/l", "o_pos mm/s", "o_rot deg/s", "motion");
  for (const auto &p : scenario_presets()) {
    fmt::print("{:<16} {:<16} {:>7.0f} {:>8.0f} {:>6.2f} {:>6.2f}  {:<20} {:<16} {}\n", p.name,
               p.label, p.time_s, p.length_m, p.length_scale, p.sigma_se_over_l,
               fmt::format("({:g},{:g},{:g})", p.o_pos_mm_s.x(), p.o_pos_mm_s.y(),
                           p.o_pos_mm_s.z()),
               fmt::format("({:g},{:g},{:g})", p.o_rot_deg_s.x(), p.o_rot_deg_s.y(),
                           p.o_rot_deg_s.z()),
               motion_name(p.motion.kind));
  }
  return kOk;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Magnetic field SLAM with an online-calibrated magnetometer array"};
  app.require_subcommand(1);
  app.footer("Exit codes: 0 success, 1 internal error, 2 configuration error, 3 data/IO error, "
             "4 filter divergence.\nEnvironment: MAGSLAM_OUTPUT_ROOT sets the default output "
             "root.");

  CommonArgs sim_args;
  auto *sim = app.add_subcommand("simulate", "simulate datasets (one directory per replicate)");
  add_common(sim, sim_args);

  CommonArgs slam_common;
  SlamArgs slam_args;
  auto *slam = app.add_subcommand(
      "slam", "run a filter mode on a dataset, or on freshly simulated replicates");
  add_common(slam, slam_common);
  slam->add_option("-d,--data", slam_args.data, "dataset directory (omit to simulate)")
      ->check(CLI::ExistingDirectory);
  slam->add_option("-m,--mode", slam_args.mode,
                   "slamma, slcamma, single_mag or dead_reckoning");
  slam->add_flag("--no-precalibrate", slam_args.no_precalibrate,
                 "feed raw (biased) readings to slamma/single_mag");
  slam->add_option("--single-mag-index", slam_args.single_mag_index,
                   "sensor used by single_mag");
  slam->add_option("--n-modes", slam_args.n_modes, "number of SE basis functions");

  std::vector<std::string> report_inputs;
  std::string report_out;
  bool report_consistency = false;
  auto *report = app.add_subcommand("report", "aggregate run directories for plotting");
  report->add_option("runs", report_inputs,
                     "run directories, or parent directories searched recursively")
      ->required();
  report->add_option("-o,--out", report_out,
                     "report directory (default: $MAGSLAM_OUTPUT_ROOT/report, else runs/report)");
  report->add_flag("--consistency", report_consistency,
                   "write per-sensor field norms before and after the estimated calibration");

  std::string map_run, map_out;
  std::optional<double> map_z;
  double map_spacing = 0.05;
  auto *mapx = app.add_subcommand("map-export", "render the map grid CSV of a finished run");
  mapx->add_option("-r,--run", map_run, "run directory")->required()->check(CLI::ExistingDirectory);
  mapx->add_option("-o,--out", map_out, "output CSV (default: <run>/map_grid.csv)");
  mapx->add_option("--z", map_z, "grid height in metres (default: initial true height, else 0)");
  mapx->add_option("--spacing", map_spacing, "grid spacing in metres")
      ->check(CLI::PositiveNumber);

  auto *presets = app.add_subcommand("presets", "scenario presets");
  presets->require_subcommand(1);
  bool presets_json = false;
  auto *plist = presets->add_subcommand("list", "list scenario presets");
  plist->add_flag("--json", presets_json, "print as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (*sim) {
      return cmd_simulate(sim_args);
    }
    if (*slam) {
      return cmd_slam(slam_common, slam_args);
    }
    if (*report) {
      const std::string out =
          report_out.empty() ? (fs::path(output_root()) / "report").string() : report_out;
      const auto runs = collect_runs(report_inputs);
      const auto summary = make_report(runs, out, ReportOptions{report_consistency});
      fmt::print("{}: {} runs in {} groups\n", out, runs.size(), summary["groups"].size());
      return kOk;
    }
    if (*mapx) {
      const std::string out =
          map_out.empty() ? (fs::path(map_run) / "map_grid.csv").string() : map_out;
      export_map_grid(map_run, out, map_z, map_spacing);
      fmt::print("{}\n", out);
      return kOk;
    }
    if (*plist) {
      return cmd_presets(presets_json);
    }
  } catch (const ConfigError &e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return kConfig;
  } catch (const std::invalid_argument &e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return kConfig;
  } catch (const DataError &e) {
    fmt::print(stderr, "data error: {}\n", e.what());
    return kData;
  } catch (const fs::filesystem_error &e) {
    fmt::print(stderr, "data error: {}\n", e.what());
    return kData;
  } catch (const DivergenceError &e) {
    fmt::print(stderr, "divergence: {}\n", e.what());
    return kDiverged;
  } catch (const std::exception &e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kInternal;
  }
  return kInternal;
}
