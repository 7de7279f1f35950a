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

#include "magslam/dataset.hpp"

#include <stdexcept>
#include <string>

namespace magslam {

void Dataset::validate() const {
  layout.validate();
  if (!(rate > 0.0)) {
    throw std::invalid_argument("dataset rate must be positive");
  }
  const size_t n = odom_dp.size();
  if (odom_drot.size() != n || measurements.size() != n) {
    throw std::invalid_argument("dataset sequences have inconsistent lengths");
  }
  if (!ground_truth.empty() && ground_truth.size() != n + 1) {
    throw std::invalid_argument("ground truth must hold one pose more than the odometry");
  }
  for (size_t k = 0; k < n; ++k) {
    if (measurements[k].n_mag() != layout.n_mag() ||
        measurements[k].y.size() != 3 * layout.n_mag()) {
      throw std::invalid_argument("measurement " + std::to_string(k + 1) +
                                  " does not match the layout");
    }
    if (!measurements[k].y.allFinite() || !odom_dp[k].allFinite() ||
        !odom_drot[k].allFinite()) {
      throw std::invalid_argument("dataset contains non-finite values at step " +
                                  std::to_string(k));
    }
  }
  if (calib_true && calib_true->n_mag() != layout.n_mag()) {
    throw std::invalid_argument("true calibration does not match the layout");
  }
}

Dataset Dataset::single_sensor(int index) const {
  Dataset out = *this;
  out.layout = layout.single(index);
  for (auto &m : out.measurements) {
    m.y = Eigen::VectorXd(m.y.segment<3>(3 * index));
  }
  if (calib_true) {
    out.calib_true = calib_true->single(index);
  }
  out.metadata["single_sensor_index"] = index;
  return out;
}

Dataset Dataset::precalibrated() const {
  if (!calib_true) {
    throw std::invalid_argument("pre-calibration needs the true calibration");
  }
  Dataset out = *this;
  for (auto &m : out.measurements) {
    m.y = apply_calibration(m.y, *calib_true);
  }
  out.calib_true = Calibration::identity(layout.n_mag());
  out.metadata["precalibrated"] = true;
  return out;
}

} // namespace magslam
