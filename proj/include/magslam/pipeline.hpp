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

#ifndef MAGSLAM_PIPELINE_HPP_
#define MAGSLAM_PIPELINE_HPP_

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "magslam/config.hpp"
#include "magslam/dataset.hpp"
#include "magslam/filter.hpp"
#include "magslam/io.hpp"
#include "magslam/metrics.hpp"
#include "magslam/simulate.hpp"

namespace magslam {

/// "builtin_30" or a layout CSV path.
ArrayLayout resolve_layout(const std::string &name);

struct SimulatedScenario {
  Dataset data;
  FieldOracle field;
  std::vector<Pose> truth;
};

/// Field generator settings for a region; sigma and length scale fall back
/// to the filter hyperparameters.
FieldSpec field_spec(const RunConfig &cfg, const DomainBox &region, std::uint64_t seed);

/// Simulated replicate. Sub-seeds are derive_seed(cfg.seed, stream, replicate).
SimulatedScenario simulate_scenario(const RunConfig &cfg, int replicate = 0);

/// Data actually fed to the filter: single-sensor collapse and optional
/// correction with the true calibration.
Dataset filter_input(const RunConfig &cfg, const Dataset &raw);

/// Map domain: sensor track of the ground truth (dead reckoning when absent)
/// inflated by the configured margin.
DomainBox filter_domain(const RunConfig &cfg, const Dataset &input);

struct RunOutcome {
  RunMode mode = RunMode::Slcamma;
  Dataset input;
  std::optional<BasisSet> basis;
  RunResult result;
  std::vector<Pose> dead_reckoning;
  std::optional<TrajError> error;
  std::optional<TrajError> dead_reckoning_error;
  nlohmann::json summary;
  double runtime_s = 0.0;

  bool diverged() const { return result.divergence_step.has_value(); }
};

/// Runs the configured mode on a raw dataset.
RunOutcome run_mode(const RunConfig &cfg, const Dataset &raw);

MapExport map_export(const RunOutcome &run, const GpHyper &hyper);

/// Writes every run artifact into out_dir and returns the summary. Timing
/// goes to manifest.json only, so the remaining files are reproducible.
nlohmann::json export_run(const RunConfig &cfg, const RunOutcome &run, const std::string &out_dir,
                          const std::string &dataset_dir = "");

struct ReportOptions {
  bool consistency = false; ///< per-sensor corrected norms from the run datasets
};

/// Aggregates completed run directories into out_dir; returns summary.json.
nlohmann::json make_report(const std::vector<std::string> &run_dirs, const std::string &out_dir,
                           const ReportOptions &opts = {});

/// Re-renders map_grid.csv from a run directory's map export.
void export_map_grid(const std::string &run_dir, const std::string &out_path,
                     std::optional<double> z, double spacing);

} // namespace magslam

#endif // MAGSLAM_PIPELINE_HPP_
