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

#ifndef MAGSLAM_ARRAY_HPP_
#define MAGSLAM_ARRAY_HPP_

#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "magslam/geometry.hpp"

namespace magslam {

/// Evaluates the navigation-frame magnetic field (uT) at a position.
using FieldFn = std::function<Vec3(const Vec3 &)>;

using Rng = std::mt19937_64;

/// Body-frame sensor positions of a rigid magnetometer board.
struct ArrayLayout {
  std::vector<Vec3> sensor_positions;

  int n_mag() const { return static_cast<int>(sensor_positions.size()); }
  void validate() const;
  /// Layout keeping only sensor `index` (single-magnetometer baseline).
  ArrayLayout single(int index) const;
};

/// 30 sensors on a 6 x 5 grid spanning a 345 mm x 245 mm board centred on
/// the body origin (x along the long edge), z = 0.
ArrayLayout default_layout_30();

ArrayLayout load_layout_csv(const std::string &path);
void write_layout_csv(const ArrayLayout &layout, const std::string &path);

/// Per-sensor diagonal scale d (dimensionless) and bias b (uT).
struct Calibration {
  std::vector<Vec3> scale;
  std::vector<Vec3> bias;

  static Calibration identity(int n_mag);
  int n_mag() const { return static_cast<int>(scale.size()); }
  void validate() const;
  Calibration single(int index) const;
};

/// Stacked readings (3 * n_mag) of one synchronous array sample.
struct ArrayMeasurement {
  int k = 0;
  Eigen::VectorXd y;

  int n_mag() const { return static_cast<int>(y.size() / 3); }
  Vec3 sensor(int i) const { return y.segment<3>(3 * i); }
};

/// y_i = diag(d_i)^-1 (R^bn f(p + R^nb s_i) + b_i) + e_i, e_i ~ N(0, sigma_y^2 I).
ArrayMeasurement measure_forward(const FieldFn &field, const Pose &pose,
                                 const ArrayLayout &layout,
                                 const Calibration &calib, double sigma_y,
                                 Rng &rng, int k = 0);

/// Corrected readings diag(d_hat) y and their (diagonal) noise covariance
/// sigma_y^2 diag(d_hat)^2.
struct CorrectedMeasurement {
  Eigen::VectorXd z_input;
  Eigen::VectorXd cov_diag;
};

CorrectedMeasurement correct_measurement(const ArrayMeasurement &y,
                                         const std::vector<Vec3> &scale_est,
                                         double sigma_y);

/// Exact inversion of the calibration: diag(d) y - b.
Eigen::VectorXd apply_calibration(const Eigen::VectorXd &y,
                                  const Calibration &calib);

} // namespace magslam

#endif // MAGSLAM_ARRAY_HPP_
