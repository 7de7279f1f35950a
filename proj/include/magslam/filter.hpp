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

#ifndef MAGSLAM_FILTER_HPP_
#define MAGSLAM_FILTER_HPP_

#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "magslam/array.hpp"
#include "magslam/dataset.hpp"
#include "magslam/fieldmap.hpp"
#include "magslam/geometry.hpp"

namespace magslam {

/// Numerical breakdown of the filter (failed factorisation, non-finite
/// state or an implausible step).
class DivergenceError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class FilterMode {
  Slamma,  ///< pre-calibrated array: pose + map
  Slcamma, ///< pose + map + per-sensor scale and bias
};

/// Index ranges of the error state [dp, eta, dm, dd, db].
struct StateLayout {
  int n_weights = 0;
  int n_mag = 0;
  bool calibrated = false;

  static constexpr int kPos = 0;
  static constexpr int kRot = 3;
  static constexpr int kMap = 6;
  int scale() const { return kMap + n_weights; }
  int bias() const { return scale() + 3 * n_mag; }
  int dim() const { return kMap + n_weights + (calibrated ? 6 * n_mag : 0); }
};

struct FilterState {
  Vec3 position = Vec3::Zero();
  Mat3 rot_bn = Mat3::Identity();
  Eigen::VectorXd weights;
  std::optional<Calibration> calib; ///< present iff Slcamma

  Pose pose() const { return {position, rot_bn}; }
  bool finite() const;
};

struct InfoForm {
  Eigen::MatrixXd mat;
  Eigen::VectorXd vec;
  /// Relative asymmetry of mat just before the last re-symmetrisation.
  double asymmetry = 0.0;
};

/// Per-step process noise plus priors. Covariances, not standard deviations.
struct NoiseConfig {
  Mat3 q_pos = Mat3::Identity() * 1e-6;  ///< m^2 per step
  Mat3 q_rot = Mat3::Identity() * 3e-8;  ///< rad^2 per step
  double sigma_ver = 1e-4;               ///< m^2
  double sigma_y = 0.1;                  ///< uT
  double prior_scale_var = 1e-6;         ///< Lambda_d diagonal
  double prior_bias_var = 1e-2;          ///< Lambda_b diagonal (uT^2)

  void validate() const;
};

struct IterationOptions {
  int tau_max = 5;
  double conv_position = 1e-4;             ///< m
  double conv_rotation = 0.1 * kDegToRad;  ///< rad
  double max_position_step = 10.0;         ///< m, larger steps flag divergence
};

StateLayout state_layout(const BasisSet &basis, const ArrayLayout &layout,
                         FilterMode mode);

/// Known initial pose (origin, identity), zero map, unit scale and zero bias;
/// block-diagonal information with 1e12 on the pose.
std::pair<FilterState, InfoForm> init_filter(const NoiseConfig &noise,
                                             const GpHyper &hyper,
                                             const BasisSet &basis,
                                             const ArrayLayout &layout,
                                             FilterMode mode);

/// Odometry propagation of the state and Woodbury propagation of the
/// information matrix. Resets the information vector.
void dynamic_update(FilterState &state, InfoForm &info, const Vec3 &dp_body,
                    const Mat3 &drot, const Mat3 &q_pos, const Mat3 &q_rot);

/// Scalar pseudo-measurement of the vertical position.
void vertical_update(FilterState &state, InfoForm &info, double y_ver,
                     double sigma_ver);

/// Error-state retraction: additive for p, m, d, b; exp_rot(eta) * R for R.
void retract(FilterState &state, const StateLayout &sl, const Eigen::VectorXd &dx);

/// Local error between two states, the inverse of retract.
Eigen::VectorXd state_difference(const FilterState &a, const FilterState &b,
                                 const StateLayout &sl);

/// Residual diag(d_hat) y - R^bn grad_phi(q) m_hat - b_hat for all sensors
/// (d_hat = 1, b_hat = 0 without calibration states).
Eigen::VectorXd mag_residual(const FilterState &state, const ArrayLayout &layout,
                             const BasisSet &basis, const ArrayMeasurement &y);

struct MagLinearization {
  Eigen::MatrixXd jacobian; ///< d residual / d error state, 3 n_mag x dim
  Eigen::VectorXd residual;
  Eigen::VectorXd noise_var; ///< diagonal of Sigma_z
  int outside = 0;          ///< sensors queried outside the map domain
};

MagLinearization mag_linearize(const FilterState &state, const ArrayLayout &layout,
                               const BasisSet &basis, const ArrayMeasurement &y,
                               double sigma_y);

/// Jacobian block only.
Eigen::MatrixXd mag_jacobian(const FilterState &state, const ArrayLayout &layout,
                             const BasisSet &basis, const ArrayMeasurement &y);

struct MagUpdateResult {
  int iterations = 0;
  bool converged = false;
  double last_step_norm = 0.0; ///< norm of the final error-state increment
  int outside = 0;
};

/// Iterated (Gauss-Newton) magnetometer-array update.
MagUpdateResult mag_update_iterated(FilterState &state, InfoForm &info,
                                    const ArrayMeasurement &y,
                                    const ArrayLayout &layout,
                                    const BasisSet &basis, double sigma_y,
                                    const IterationOptions &opts = {});

/// Solves A x = b for symmetric positive-definite A using a Jacobi-scaled
/// Cholesky factorisation with jitter escalation. Throws DivergenceError.
Eigen::VectorXd solve_spd(const Eigen::MatrixXd &a, const Eigen::VectorXd &b);

/// Largest |A - A^T| relative to the largest |A|.
double relative_asymmetry(const Eigen::MatrixXd &a);

// ---------------------------------------------------------------------------

struct SlamOptions {
  FilterMode mode = FilterMode::Slamma;
  GpHyper hyper;
  NoiseConfig noise;
  IterationOptions iteration;
  bool vertical_update = false;
};

struct StepRecord {
  int k = 0;
  Pose pose;
  int iterations = 0;
  bool diverged = false;
  int outside = 0;
};

struct RunResult {
  FilterMode mode = FilterMode::Slamma;
  std::vector<StepRecord> steps; ///< k = 0..N
  std::vector<Calibration> calib_history; ///< k = 0..N, Slcamma only
  Eigen::VectorXd weights;
  Eigen::MatrixXd info;
  std::optional<int> divergence_step;
  std::string divergence_reason;

  std::vector<Pose> trajectory() const;
  int max_iterations() const;
};

/// Runs the filter over a dataset on the given basis.
RunResult run_slam(const Dataset &data, const BasisSet &basis,
                   const SlamOptions &opts);

/// Pure odometry integration from the origin.
std::vector<Pose> dead_reckoning(const Dataset &data);

} // namespace magslam

#endif // MAGSLAM_FILTER_HPP_
