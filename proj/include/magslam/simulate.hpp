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

#ifndef MAGSLAM_SIMULATE_HPP_
#define MAGSLAM_SIMULATE_HPP_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "magslam/array.hpp"
#include "magslam/dataset.hpp"
#include "magslam/fieldmap.hpp"
#include "magslam/geometry.hpp"

namespace magslam {

/// splitmix64-based sub-seed: derive_seed(master, stream, index).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index = 0);

/// Curl-free kernel (sigma^2 / l^2) exp(-|r|^2 / 2 l^2) (I - r r^T / l^2),
/// the negative position-Hessian of the squared-exponential potential kernel.
Mat3 curl_free_kernel(const Vec3 &r, double sigma, double length_scale);

enum class FieldMethod { Dense, ReducedRank };

struct FieldSpec {
  double sigma_cf = 1.0;      ///< uT m (potential scale)
  double length_scale = 1.0;  ///< m
  Vec3 earth_field{19.2, 0.8, 45.5};
  DomainBox region;           ///< must enclose the planned motion
  std::uint64_t seed = 0;
  FieldMethod method = FieldMethod::Dense;
  double anchor_spacing = 0.5; ///< lattice spacing in length scales (dense)
  double anchor_margin = 1.0;  ///< lattice margin beyond region, length scales
  double jitter = 1e-10;       ///< relative diagonal jitter on the anchor covariance
  int n_modes = 1500;          ///< reduced-rank generator size
  double rr_margin = 2.0;      ///< reduced-rank domain margin, length scales
};

/**
 * Ground-truth magnetic field: a constant earth field plus a curl-free
 * disturbance, either a dense GP sample conditioned on an anchor lattice or
 * a reduced-rank sample. Evaluation is pure and deterministic.
 */
class FieldOracle {
public:
  /// Zero disturbance.
  explicit FieldOracle(Vec3 earth_field);
  /// Dense disturbance sum_a K(p, a) alpha_a. anchor_values defaults to the
  /// disturbance evaluated at the anchors.
  FieldOracle(Vec3 earth_field, std::vector<Vec3> anchors, Eigen::VectorXd alpha,
              double sigma_cf, double length_scale, Eigen::VectorXd anchor_values = {});
  /// Reduced-rank disturbance grad_phi(p) m.
  FieldOracle(Vec3 earth_field, std::shared_ptr<const BasisSet> basis,
              Eigen::VectorXd weights);

  Vec3 operator()(const Vec3 &p) const;
  /// Analytic field Jacobian d f / d p.
  Mat3 jacobian(const Vec3 &p) const;

  FieldMethod method() const { return method_; }
  const Vec3 &earth_field() const { return earth_; }
  const std::vector<Vec3> &anchors() const { return anchors_; }
  /// Disturbance values at the anchors (3 per anchor).
  const Eigen::VectorXd &anchor_values() const { return anchor_values_; }
  FieldFn as_function() const;

private:
  FieldMethod method_ = FieldMethod::Dense;
  Vec3 earth_;
  std::vector<Vec3> anchors_;
  Eigen::VectorXd alpha_;
  Eigen::VectorXd anchor_values_;
  double sigma_ = 0.0;
  double length_ = 1.0;
  std::shared_ptr<const BasisSet> basis_;
  Eigen::VectorXd weights_;
};

/// Sensor positions in the navigation frame along a trajectory.
std::vector<Vec3> sensor_track(const std::vector<Pose> &truth, const ArrayLayout &layout);

/// Bounding box of the sensor track; may be flat along an axis.
DomainBox track_region(const std::vector<Pose> &truth, const ArrayLayout &layout);

/// Anchor lattice used by the dense method for a field spec.
std::vector<Vec3> anchor_lattice(const FieldSpec &spec);

/// Dense GP sample conditioned on explicit anchors.
FieldOracle sample_dense_field(const std::vector<Vec3> &anchors, double sigma_cf,
                               double length_scale, const Vec3 &earth_field,
                               std::uint64_t seed, double jitter = 1e-10);

FieldOracle sample_field(const FieldSpec &spec);

// ---------------------------------------------------------------------------

enum class MotionKind {
  FullRotationInPlace,
  WigglingInPlace,
  YawRotationInPlace,
  CircleNoRotation,
  CircleYawRotation,
  CircleWiggle,
  SquareLoop,   ///< desk-scale square, optional in-place corner turns
  Snake,        ///< back-and-forth rows, optional in-place corner turns
  InfinityLoop, ///< figure-eight, heading follows the path tangent
};

std::string motion_name(MotionKind kind);
MotionKind parse_motion(const std::string &name);
std::vector<MotionKind> paper_motions();

struct MotionSpec {
  MotionKind kind = MotionKind::CircleNoRotation;
  double duration = 100.0;       ///< s
  double rate = 10.0;            ///< Hz
  double radius = 0.1;           ///< m, circle motions
  double wiggle_deg = 5.0;       ///< amplitude of wiggles
  double yaw_amplitude_deg = 90.0;
  double max_rate_deg = 90.0;    ///< angular speed cap of the random walk
  double laps = 1.0;             ///< circle laps over the duration
  double side = 1.0;             ///< m, square side, snake row length, figure-eight width
  double speed = 0.15;           ///< m/s, path motions
  int rows = 4;                  ///< snake rows
  double row_spacing = 0.3;      ///< m, snake
  double turn_rate_deg = 45.0;   ///< deg/s, in-place corner turns
  bool turn_at_corners = true;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Pose sequence k = 0..N starting at the origin with identity attitude;
/// N = round(duration * rate), except for the polyline paths (square loop,
/// snake) whose duration follows from the path length, speed and turns.
std::vector<Pose> gen_motion(const MotionSpec &spec);

struct CalibrationRanges {
  double scale_lo = 0.9, scale_hi = 1.1;
  double bias_lo = -1.5, bias_hi = 1.5;
};

Calibration sample_calibration(int n_mag, std::uint64_t seed,
                               const CalibrationRanges &ranges = {});

/// Odometry corruption and sensor noise, all per second.
struct SimNoise {
  Vec3 sigma_pos = Vec3::Constant(0.01);             ///< m/s (std)
  Vec3 sigma_rot = Vec3::Constant(0.1 * kDegToRad);  ///< rad/s (std)
  Vec3 offset_pos = Vec3::Zero();                    ///< m/s
  Vec3 offset_rot = Vec3::Zero();                    ///< rad/s
  double sigma_y = 0.1;                              ///< uT
};

/// Body-frame increments between consecutive poses.
void true_increments(const std::vector<Pose> &truth, std::vector<Vec3> &dp,
                     std::vector<Mat3> &drot);

Dataset make_dataset(const FieldFn &field, const std::vector<Pose> &truth,
                     const ArrayLayout &layout, const Calibration &calib,
                     const SimNoise &noise, double rate, std::uint64_t seed);

// ---------------------------------------------------------------------------

/// Norm series of the inter-sensor consistency check. Matrices are
/// steps x sensors.
struct ConsistencySeries {
  std::vector<double> reference;
  Eigen::MatrixXd uncalibrated;
  std::vector<Eigen::MatrixXd> corrected; ///< one per candidate calibration
};

/// Every sensor sees the field at the array centre along a planar motion;
/// readings are corrupted with the true calibration and corrected with each
/// candidate.
ConsistencySeries consistency_experiment(const std::vector<Calibration> &candidates,
                                         const Calibration &true_calib,
                                         const FieldOracle &field,
                                         const std::vector<Pose> &motion,
                                         double sigma_y, std::uint64_t seed);

} // namespace magslam

#endif // MAGSLAM_SIMULATE_HPP_
