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

#ifndef MAGSLAM_CONFIG_HPP_
#define MAGSLAM_CONFIG_HPP_

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "magslam/fieldmap.hpp"
#include "magslam/filter.hpp"
#include "magslam/geometry.hpp"
#include "magslam/simulate.hpp"

namespace magslam {

/// Invalid or inconsistent configuration. The message starts with the
/// offending field path.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kSchemaVersion = 1;

enum class RunMode { Slamma, Slcamma, SingleMag, DeadReckoning };

std::string mode_name(RunMode mode);
RunMode parse_mode(const std::string &name);

/// Seed streams of the counter scheme derive_seed(master, stream, replicate).
enum class SeedStream : std::uint64_t {
  Motion = 1,
  Field = 2,
  Calibration = 3,
  Measurement = 4,
  Consistency = 5,
};

struct FieldConfig {
  std::optional<double> sigma_cf;     ///< defaults to hyper.sigma_se
  std::optional<double> length_scale; ///< defaults to hyper.length_scale
  Vec3 earth_field{19.2, 0.8, 45.5};
  FieldMethod method = FieldMethod::Dense;
  int n_modes = 1500;      ///< reduced-rank generator size
  double rr_margin = 2.0;  ///< length scales
};

/// Everything needed to simulate and/or filter one scenario.
struct RunConfig {
  int schema_version = kSchemaVersion;
  std::string preset;
  RunMode mode = RunMode::Slcamma;
  bool precalibrate = true; ///< slamma/single_mag: correct data with the true calibration
  int single_mag_index = 0;

  GpHyper hyper;
  int n_se_modes = 500;
  std::optional<double> domain_margin; ///< m; defaults to 2 length scales

  // Odometry noise as per-second standard deviations.
  Vec3 sigma_pos_mm_s = Vec3::Constant(10.0);
  Vec3 sigma_rot_deg_s = Vec3::Constant(0.1);
  double sigma_ver = 1e-4;       ///< m^2
  double prior_scale_std = 0.001;
  double prior_bias_std = 0.1;   ///< uT

  // Simulated odometry drift.
  Vec3 o_pos_mm_s = Vec3::Zero();
  Vec3 o_rot_deg_s = Vec3::Zero();

  FieldConfig field;
  MotionSpec motion;
  std::string layout = "builtin_30"; ///< or a layout CSV path
  bool sample_calibration = true;
  CalibrationRanges calibration_ranges;
  bool vertical_update = false;
  IterationOptions iteration;

  std::uint64_t seed = 0;
  int mc = 1;
  double grid_spacing = 0.05; ///< m, map export
  std::string output;

  double margin() const;
  NoiseConfig noise_config() const;   ///< per-step filter noise
  SimNoise sim_noise() const;         ///< per-second simulation noise
  SlamOptions slam_options() const;
  void validate() const;              ///< throws ConfigError
};

/// One row of the scenario settings table plus the synthetic path analogue.
struct ScenarioPreset {
  std::string name;   ///< machine key, e.g. snake_wide_1
  std::string label;  ///< display name, e.g. "Snake wide 1"
  double time_s = 0.0;
  double length_m = 0.0;
  double length_scale = 0.0;
  double sigma_se_over_l = 0.0;
  Vec3 sigma_pos_mm_s = Vec3::Constant(10.0);
  Vec3 sigma_rot_deg_s{0.1, 0.1, 1.0};
  Vec3 o_pos_mm_s = Vec3::Zero();
  Vec3 o_rot_deg_s = Vec3::Zero();
  MotionSpec motion; ///< analogue path with the listed time and length

  double sigma_se() const { return sigma_se_over_l * length_scale; }
};

const std::vector<ScenarioPreset> &scenario_presets();
const ScenarioPreset &find_preset(const std::string &name);
void apply_preset(const ScenarioPreset &preset, RunConfig &cfg);

RunConfig config_from_json(const nlohmann::json &doc);
nlohmann::json config_to_json(const RunConfig &cfg);
RunConfig load_config(const std::string &path);

} // namespace magslam

#endif // MAGSLAM_CONFIG_HPP_
