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

#ifndef MAGSLAM_METRICS_HPP_
#define MAGSLAM_METRICS_HPP_

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "magslam/array.hpp"
#include "magslam/geometry.hpp"

namespace magslam {

/// Calibration error statistics per time step. Each matrix is K x 4 with
/// columns x, y, z, all.
///
/// MAE is the mean absolute component error over sensors and replicates.
/// STD is the root-mean-square error: per axis for x, y, z, and over the
/// Euclidean deviation vector for "all". It is not a centred deviation.
struct CalibErrorCurve {
  Eigen::MatrixXd mae_scale, std_scale;
  Eigen::MatrixXd mae_bias, std_bias;

  int n_steps() const { return static_cast<int>(mae_scale.rows()); }
};

/// histories[j][k] is the estimate of replicate j at step k; truths[j] its
/// true calibration.
CalibErrorCurve calib_mae_std(const std::vector<std::vector<Calibration>> &histories,
                              const std::vector<Calibration> &truths);

void write_calib_errors_csv(const CalibErrorCurve &curve, const std::string &path);
CalibErrorCurve read_calib_errors_csv(const std::string &path);

struct TrajError {
  std::vector<double> position;     ///< m, per step
  std::vector<double> rotation_deg; ///< angle of R_est R_gt^T
  double final_position = 0.0;
  double final_rotation_deg = 0.0;
  double rmse_position = 0.0;
  double rmse_rotation_deg = 0.0;
};

TrajError traj_errors(const std::vector<Pose> &estimate, const std::vector<Pose> &truth);

struct DriftReduction {
  double final_pct = 0.0;
  double rmse_pct = 0.0;
};

/// 100 (1 - est / baseline) on final error and on RMSE.
DriftReduction drift_reduction(const TrajError &est, const TrajError &baseline);

/// Inter-sensor spread of a steps x sensors norm matrix.
struct ConsistencyStats {
  std::vector<double> range; ///< max - min per step
  std::vector<double> std;   ///< population std per step
  double median_range = 0.0;
};

ConsistencyStats consistency_stats(const Eigen::MatrixXd &norms);

double median(std::vector<double> v);

/// Long-format table k, t, mode, pos_err, rot_err_deg.
void write_traj_errors_csv(const std::vector<std::pair<std::string, TrajError>> &errors,
                           double rate, const std::string &path);

} // namespace magslam

#endif // MAGSLAM_METRICS_HPP_
