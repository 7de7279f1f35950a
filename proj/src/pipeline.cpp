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

#include "magslam/pipeline.hpp"

#include <chrono>
#include <filesystem>
#include <map>

#include <fmt/format.h>

namespace magslam {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string join(const std::string &dir, const std::string &name) {
  return (fs::path(dir) / name).string();
}

json vec_json(const Vec3 &v) { return json::array({v.x(), v.y(), v.z()}); }

json domain_json(const DomainBox &d) {
  return {{"lower", vec_json(d.lower)}, {"upper", vec_json(d.upper)}};
}

json error_json(const TrajError &e) {
  return {{"final_position_m", e.final_position},
          {"rmse_position_m", e.rmse_position},
          {"final_rotation_deg", e.final_rotation_deg},
          {"rmse_rotation_deg", e.rmse_rotation_deg}};
}

json final_calib_json(const Calibration &est, const Calibration &truth) {
  Vec3 ds = Vec3::Zero(), db = Vec3::Zero();
  for (int i = 0; i < est.n_mag(); ++i) {
    ds += (est.scale[i] - truth.scale[i]).cwiseAbs();
    db += (est.bias[i] - truth.bias[i]).cwiseAbs();
  }
  ds /= est.n_mag();
  db /= est.n_mag();
  return {{"mae_scale", vec_json(ds)},
          {"mae_scale_all", ds.mean()},
          {"mae_bias", vec_json(db)},
          {"mae_bias_all", db.mean()}};
}

std::string group_key(const RunConfig &cfg) {
  return cfg.preset.empty() ? motion_name(cfg.motion.kind) : cfg.preset;
}

void require_file(const std::string &path) {
  if (!fs::exists(path)) {
    throw DataError(path + ": missing run artifact");
  }
}

} // namespace

ArrayLayout resolve_layout(const std::string &name) {
  if (name == "builtin_30") {
    return default_layout_30();
  }
  if (!fs::exists(name)) {
    throw ConfigError("layout: file '" + name + "' does not exist");
  }
  return load_layout_csv(name);
}

FieldSpec field_spec(const RunConfig &cfg, const DomainBox &region, std::uint64_t seed) {
  FieldSpec spec;
  spec.sigma_cf = cfg.field.sigma_cf.value_or(cfg.hyper.sigma_se);
  spec.length_scale = cfg.field.length_scale.value_or(cfg.hyper.length_scale);
  spec.earth_field = cfg.field.earth_field;
  spec.region = region;
  spec.seed = seed;
  spec.method = cfg.field.method;
  spec.n_modes = cfg.field.n_modes;
  spec.rr_margin = cfg.field.rr_margin;
  return spec;
}

SimulatedScenario simulate_scenario(const RunConfig &cfg, int replicate) {
  cfg.validate();
  const auto r = static_cast<std::uint64_t>(replicate);
  auto sub = [&](SeedStream s) {
    return derive_seed(cfg.seed, static_cast<std::uint64_t>(s), r);
  };
  const ArrayLayout layout = resolve_layout(cfg.layout);
  MotionSpec motion = cfg.motion;
  motion.seed = sub(SeedStream::Motion);
  std::vector<Pose> truth = gen_motion(motion);

  FieldOracle field =
      sample_field(field_spec(cfg, track_region(truth, layout), sub(SeedStream::Field)));
  const Calibration calib =
      cfg.sample_calibration
          ? sample_calibration(layout.n_mag(), sub(SeedStream::Calibration), cfg.calibration_ranges)
          : Calibration::identity(layout.n_mag());
  Dataset ds = make_dataset(field.as_function(), truth, layout, calib, cfg.sim_noise(),
                            motion.rate, sub(SeedStream::Measurement));
  ds.metadata["master_seed"] = cfg.seed;
  ds.metadata["replicate"] = replicate;
  ds.metadata["motion"] = motion_name(motion.kind);
  ds.metadata["preset"] = cfg.preset;
  ds.metadata["field_method"] = cfg.field.method == FieldMethod::Dense ? "dense" : "reduced_rank";
  return SimulatedScenario{std::move(ds), std::move(field), std::move(truth)};
}

Dataset filter_input(const RunConfig &cfg, const Dataset &raw) {
  Dataset ds = raw;
  if (cfg.mode == RunMode::SingleMag) {
    if (cfg.single_mag_index >= raw.layout.n_mag()) {
      throw ConfigError(fmt::format("single_mag_index: {} is out of range for {} sensors",
                                    cfg.single_mag_index, raw.layout.n_mag()));
    }
    ds = ds.single_sensor(cfg.single_mag_index);
  }
  const bool correct = cfg.precalibrate && cfg.mode != RunMode::Slcamma &&
                       cfg.mode != RunMode::DeadReckoning;
  if (correct) {
    if (!ds.calib_true) {
      throw ConfigError("precalibrate: dataset has no true calibration");
    }
    ds = ds.precalibrated();
  }
  return ds;
}

DomainBox filter_domain(const RunConfig &cfg, const Dataset &input) {
  const std::vector<Pose> track =
      input.has_ground_truth() ? input.ground_truth : dead_reckoning(input);
  const std::vector<Vec3> points = sensor_track(track, input.layout);
  return build_domain(points, cfg.margin());
}

RunOutcome run_mode(const RunConfig &cfg, const Dataset &raw) {
  cfg.validate();
  raw.validate();
  const auto t0 = std::chrono::steady_clock::now();
  RunOutcome out;
  out.mode = cfg.mode;
  out.input = filter_input(cfg, raw);
  out.dead_reckoning = dead_reckoning(out.input);
  if (cfg.mode == RunMode::DeadReckoning) {
    out.result.mode = FilterMode::Slamma;
    for (size_t k = 0; k < out.dead_reckoning.size(); ++k) {
      out.result.steps.push_back({static_cast<int>(k), out.dead_reckoning[k], 0, false, 0});
    }
  } else {
    if (cfg.vertical_update && !out.input.has_ground_truth()) {
      throw ConfigError("vertical_update: needs a dataset with ground truth");
    }
    const DomainBox domain = filter_domain(cfg, out.input);
    out.basis.emplace(build_basis(domain, cfg.n_se_modes, cfg.hyper));
    out.result = run_slam(out.input, *out.basis, cfg.slam_options());
  }
  out.runtime_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  json s;
  s["mode"] = mode_name(cfg.mode);
  s["group"] = group_key(cfg);
  s["preset"] = cfg.preset;
  s["motion"] = motion_name(cfg.motion.kind);
  s["seed"] = cfg.seed;
  s["replicate"] = out.input.metadata.value("replicate", 0);
  s["n_steps"] = out.input.n_steps();
  s["n_mag"] = out.input.layout.n_mag();
  s["rate"] = out.input.rate;
  s["precalibrated"] = out.input.metadata.value("precalibrated", false);
  if (out.basis) {
    s["n_weights"] = out.basis->n_weights();
    s["domain"] = domain_json(out.basis->domain());
  }
  s["max_iterations"] = out.result.max_iterations();
  s["diverged"] = out.diverged();
  s["divergence_step"] = out.diverged() ? json(*out.result.divergence_step) : json(nullptr);
  s["divergence_reason"] = out.result.divergence_reason;
  if (out.input.has_ground_truth()) {
    out.error = traj_errors(out.result.trajectory(), out.input.ground_truth);
    out.dead_reckoning_error = traj_errors(out.dead_reckoning, out.input.ground_truth);
    s["error"] = error_json(*out.error);
    s["dead_reckoning_error"] = error_json(*out.dead_reckoning_error);
    if (out.dead_reckoning_error->final_position > 0.0 &&
        out.dead_reckoning_error->rmse_position > 0.0) {
      const DriftReduction dr = drift_reduction(*out.error, *out.dead_reckoning_error);
      s["drift_reduction"] = {{"final_pct", dr.final_pct}, {"rmse_pct", dr.rmse_pct}};
    } else {
      s["drift_reduction"] = nullptr;
    }
  }
  if (cfg.mode == RunMode::Slcamma && out.input.calib_true && !out.result.calib_history.empty()) {
    s["calibration"] = final_calib_json(out.result.calib_history.back(), *out.input.calib_true);
  }
  out.summary = std::move(s);
  return out;
}

MapExport map_export(const RunOutcome &run, const GpHyper &hyper) {
  if (!run.basis) {
    throw std::invalid_argument("map_export: run has no map");
  }
  MapExport m;
  m.domain = run.basis->domain();
  m.modes = run.basis->modes();
  m.hyper = hyper;
  m.weights = run.result.weights;
  m.cov = map_covariance(run.result.info, run.basis->n_weights());
  return m;
}

json export_run(const RunConfig &cfg, const RunOutcome &run, const std::string &out_dir,
                const std::string &dataset_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    throw DataError(out_dir + ": cannot create directory (" + ec.message() + ")");
  }
  const double rate = run.input.rate;
  write_json(config_to_json(cfg), join(out_dir, "config.json"));
  write_trajectory_csv(trajectory_rows(run.result), rate, join(out_dir, "trajectory.csv"));
  write_trajectory_csv(trajectory_rows(run.dead_reckoning), rate,
                       join(out_dir, "dead_reckoning.csv"));
  if (run.input.has_ground_truth()) {
    write_trajectory_csv(trajectory_rows(run.input.ground_truth), rate,
                         join(out_dir, "groundtruth.csv"));
    std::vector<std::pair<std::string, TrajError>> errs{{mode_name(run.mode), *run.error}};
    if (run.mode != RunMode::DeadReckoning) {
      errs.emplace_back("dead_reckoning", *run.dead_reckoning_error);
    }
    write_traj_errors_csv(errs, rate, join(out_dir, "traj_errors.csv"));
  }
  if (run.input.calib_true) {
    write_calibration_csv(*run.input.calib_true, join(out_dir, "calibration_true.csv"));
  }
  if (!run.result.calib_history.empty()) {
    write_calibration_history_csv(run.result.calib_history,
                                  join(out_dir, "calibration_history.csv"));
    write_calibration_csv(run.result.calib_history.back(),
                          join(out_dir, "calibration_final.csv"));
    if (run.input.calib_true) {
      const CalibErrorCurve curve = calib_mae_std({run.result.calib_history},
                                                  {*run.input.calib_true});
      write_calib_errors_csv(curve, join(out_dir, "calib_errors.csv"));
    }
  }
  if (run.basis && !run.diverged()) {
    const MapExport m = map_export(run, cfg.hyper);
    write_map(m, join(out_dir, "map"));
    double z = 0.0;
    if (run.input.has_ground_truth()) {
      z = run.input.ground_truth.front().position.z();
    }
    write_map_grid_csv(m, z, cfg.grid_spacing, join(out_dir, "map_grid.csv"));
  }
  json summary = run.summary;
  summary["dataset"] = dataset_dir;
  write_json(summary, join(out_dir, "summary.json"));
  write_json({{"runtime_s", run.runtime_s}}, join(out_dir, "manifest.json"));
  return summary;
}

namespace {

struct RunArtifacts {
  std::string dir;
  std::string name;
  json summary;
};

Eigen::MatrixXd norm_matrix(const Dataset &ds, const std::optional<Calibration> &calib) {
  const int n = ds.n_steps();
  const int m = ds.layout.n_mag();
  Eigen::MatrixXd out(n, m);
  for (int k = 0; k < n; ++k) {
    const Eigen::VectorXd y =
        calib ? apply_calibration(ds.measurements[k].y, *calib) : ds.measurements[k].y;
    for (int i = 0; i < m; ++i) {
      out(k, i) = y.segment<3>(3 * i).norm();
    }
  }
  return out;
}

json mean_of(const std::vector<double> &v) {
  if (v.empty()) {
    return nullptr;
  }
  double s = 0.0;
  for (double x : v) {
    s += x;
  }
  return s / static_cast<double>(v.size());
}

} // namespace

json make_report(const std::vector<std::string> &run_dirs, const std::string &out_dir,
                 const ReportOptions &opts) {
  if (run_dirs.empty()) {
    throw DataError("report: no run directories given");
  }
  std::vector<RunArtifacts> runs;
  for (const auto &dir : run_dirs) {
    const std::string spath = join(dir, "summary.json");
    require_file(spath);
    const fs::path p = fs::path(dir).lexically_normal();
    std::string name = p.filename().string();
    if (name.empty()) {
      name = p.parent_path().filename().string();
    }
    runs.push_back({dir, name, read_json(spath)});
  }
  fs::create_directories(out_dir);

  std::map<std::string, std::vector<const RunArtifacts *>> groups;
  for (const auto &r : runs) {
    groups[r.summary.value("group", std::string("default"))].push_back(&r);
  }

  json report;
  report["n_runs"] = runs.size();
  json gjson = json::object();
  for (const auto &[group, members] : groups) {
    const std::string gdir = join(out_dir, group);
    fs::create_directories(join(gdir, "runs"));

    // Calibration curves across replicates of the calibrating mode.
    std::vector<std::vector<Calibration>> histories;
    std::vector<Calibration> truths;
    for (const RunArtifacts *r : members) {
      const std::string h = join(r->dir, "calibration_history.csv");
      const std::string t = join(r->dir, "calibration_true.csv");
      if (r->summary.value("mode", "") == "slcamma" && fs::exists(h) && fs::exists(t)) {
        histories.push_back(read_calibration_history_csv(h));
        truths.push_back(read_calibration_csv(t));
      }
    }
    json g;
    if (!histories.empty()) {
      size_t k_min = histories.front().size();
      for (const auto &h : histories) {
        k_min = std::min(k_min, h.size());
      }
      for (auto &h : histories) {
        h.resize(k_min);
      }
      const CalibErrorCurve curve = calib_mae_std(histories, truths);
      write_calib_errors_csv(curve, join(gdir, "calib_errors.csv"));
      const Eigen::Index last = curve.n_steps() - 1;
      g["calibration"] = {
          {"n_runs", histories.size()},
          {"final_mae_scale", {curve.mae_scale(last, 0), curve.mae_scale(last, 1),
                               curve.mae_scale(last, 2), curve.mae_scale(last, 3)}},
          {"final_mae_bias", {curve.mae_bias(last, 0), curve.mae_bias(last, 1),
                              curve.mae_bias(last, 2), curve.mae_bias(last, 3)}}};
    }

    // Trajectory errors merged in long format with a run column.
    {
      CsvWriter w(join(gdir, "traj_errors.csv"),
                  {"run", "k", "t", "mode", "pos_err", "rot_err_deg"});
      for (const RunArtifacts *r : members) {
        const std::string path = join(r->dir, "traj_errors.csv");
        if (!fs::exists(path)) {
          continue;
        }
        const CsvTable t = read_csv(path);
        t.require_columns({"k", "t", "mode", "pos_err", "rot_err_deg"});
        for (size_t row = 0; row < t.n_rows(); ++row) {
          w << r->name << static_cast<long long>(t.num(row, 0)) << t.num(row, 1)
            << t.text(row, 2) << t.num(row, 3) << t.num(row, 4);
          w.end_row();
        }
      }
    }

    // Per-run figure feeds.
    for (const RunArtifacts *r : members) {
      const std::string mode = r->summary.value("mode", std::string("run"));
      for (const char *f : {"trajectory.csv", "groundtruth.csv", "dead_reckoning.csv",
                            "map_grid.csv"}) {
        const fs::path src = fs::path(r->dir) / f;
        if (fs::exists(src)) {
          const fs::path dst = fs::path(gdir) / "runs" / (r->name + "_" + mode + "_" + f);
          fs::copy_file(src, dst, fs::copy_options::overwrite_existing);
        }
      }
      const fs::path map_dir = fs::path(r->dir) / "map" / "basis.json";
      if (fs::exists(map_dir)) {
        fs::copy_file(map_dir, fs::path(gdir) / "runs" / (r->name + "_" + mode + "_basis.json"),
                      fs::copy_options::overwrite_existing);
      }
    }

    // Per-mode statistics.
    std::map<std::string, std::vector<const RunArtifacts *>> by_mode;
    for (const RunArtifacts *r : members) {
      by_mode[r->summary.value("mode", std::string("unknown"))].push_back(r);
    }
    json modes = json::object();
    for (const auto &[mode, rs] : by_mode) {
      std::vector<double> fin, rmse, red;
      int diverged = 0;
      int max_it = 0;
      json names = json::array();
      for (const RunArtifacts *r : rs) {
        names.push_back(r->name);
        diverged += r->summary.value("diverged", false) ? 1 : 0;
        max_it = std::max(max_it, r->summary.value("max_iterations", 0));
        if (r->summary.contains("error")) {
          fin.push_back(r->summary["error"]["final_position_m"].get<double>());
          rmse.push_back(r->summary["error"]["rmse_position_m"].get<double>());
        }
        if (r->summary.contains("drift_reduction") && r->summary["drift_reduction"].is_object()) {
          red.push_back(r->summary["drift_reduction"]["final_pct"].get<double>());
        }
      }
      modes[mode] = {{"runs", names},
                     {"n_diverged", diverged},
                     {"max_iterations", max_it},
                     {"mean_final_position_m", mean_of(fin)},
                     {"median_final_position_m", fin.empty() ? json(nullptr) : json(median(fin))},
                     {"mean_rmse_position_m", mean_of(rmse)},
                     {"mean_drift_reduction_final_pct", mean_of(red)}};
    }
    g["modes"] = modes;

    if (opts.consistency) {
      CsvWriter w(join(gdir, "consistency.csv"),
                  {"run", "k", "t", "sensor_id", "uncalibrated", "calibrated"});
      json cj = json::object();
      for (const RunArtifacts *r : members) {
        const std::string ds_dir = r->summary.value("dataset", std::string());
        const std::string cal = join(r->dir, "calibration_final.csv");
        if (ds_dir.empty() || !fs::exists(cal)) {
          continue;
        }
        const Dataset ds = read_dataset(ds_dir);
        const Calibration c = read_calibration_csv(cal);
        if (c.n_mag() != ds.layout.n_mag()) {
          throw DataError(cal + ": sensor count does not match the dataset");
        }
        const Eigen::MatrixXd raw = norm_matrix(ds, std::nullopt);
        const Eigen::MatrixXd cor = norm_matrix(ds, c);
        for (Eigen::Index k = 0; k < raw.rows(); ++k) {
          for (Eigen::Index i = 0; i < raw.cols(); ++i) {
            w << r->name << static_cast<long long>(k + 1) << (k + 1) / ds.rate
              << static_cast<long long>(i) << raw(k, i) << cor(k, i);
            w.end_row();
          }
        }
        cj[r->name] = {{"median_range_uncalibrated", consistency_stats(raw).median_range},
                       {"median_range_calibrated", consistency_stats(cor).median_range}};
      }
      g["consistency"] = cj;
    }
    gjson[group] = g;
  }
  report["groups"] = gjson;
  write_json(report, join(out_dir, "summary.json"));
  return report;
}

void export_map_grid(const std::string &run_dir, const std::string &out_path,
                     std::optional<double> z, double spacing) {
  const std::string map_dir = join(run_dir, "map");
  require_file(join(map_dir, "basis.json"));
  const MapExport m = read_map(map_dir);
  double height = 0.0;
  if (z) {
    height = *z;
  } else if (fs::exists(join(run_dir, "groundtruth.csv"))) {
    height = read_trajectory_csv(join(run_dir, "groundtruth.csv")).front().position.z();
  }
  write_map_grid_csv(m, height, spacing, out_path);
}

} // namespace magslam
