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

#ifndef MAGSLAM_DATASET_HPP_
#define MAGSLAM_DATASET_HPP_

#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "magslam/array.hpp"
#include "magslam/geometry.hpp"

namespace magslam {

/// Time-indexed array recording.
///
/// Poses and ground truth are indexed k = 0..N. Odometry increment k moves
/// the body from pose k to pose k + 1, so there are N increments. Array
/// samples are taken at k = 1..N, after each increment.
struct Dataset {
  double rate = 10.0; ///< Hz
  ArrayLayout layout;
  std::vector<Vec3> odom_dp;   ///< body-frame position increments, m
  std::vector<Mat3> odom_drot; ///< orientation increments, R_{k+1} = dR R_k
  std::vector<ArrayMeasurement> measurements;
  std::vector<Pose> ground_truth; ///< empty when unavailable
  std::optional<Calibration> calib_true;
  nlohmann::json metadata = nlohmann::json::object();

  int n_steps() const { return static_cast<int>(odom_dp.size()); }
  bool has_ground_truth() const { return !ground_truth.empty(); }
  void validate() const;
  /// Same recording restricted to one sensor.
  Dataset single_sensor(int index) const;
  /// Measurements corrected with the true calibration (a pre-calibrated
  /// array); throws when no calibration is stored.
  Dataset precalibrated() const;
};

} // namespace magslam

#endif // MAGSLAM_DATASET_HPP_
