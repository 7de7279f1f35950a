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

#ifndef MAGSLAM_GEOMETRY_HPP_
#define MAGSLAM_GEOMETRY_HPP_

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace magslam {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

constexpr double kPi = 3.14159265358979323846;
constexpr double kDegToRad = kPi / 180.0;
constexpr double kRadToDeg = 180.0 / kPi;

/// Below this angle exp_rot switches to its Taylor expansion.
constexpr double kSmallAngle = 1e-8;

/// Cross-product matrix: skew(v) * w == v.cross(w).
Mat3 skew(const Vec3 &v);

/// Rodrigues exponential of an axis-angle vector (radians).
Mat3 exp_rot(const Vec3 &v);

/// Axis-angle of a rotation matrix; inverse of exp_rot for angles in [0, pi].
Vec3 log_rot(const Mat3 &r);

/// Angle in radians of the relative rotation a * b^T, in [0, pi].
double rotation_angle(const Mat3 &a, const Mat3 &b);

/// Nearest rotation matrix in the Frobenius sense (polar factor via SVD).
Mat3 orthonormalize(const Mat3 &r);

/// True when r^T r = I and det(r) = 1 to within tol.
bool is_rotation(const Mat3 &r, double tol = 1e-9);

/// Body-from-navigation rotation of a body with the given ZYX Euler angles
/// (roll about x, pitch about y, yaw about z; radians).
Mat3 rot_bn_from_euler(double roll, double pitch, double yaw);

/// ZYX Euler angles (roll, pitch, yaw) of the body described by rot_bn.
Vec3 euler_from_rot_bn(const Mat3 &rot_bn);

struct Pose {
  Vec3 position = Vec3::Zero(); ///< p^n, metres
  Mat3 rot_bn = Mat3::Identity();
};

} // namespace magslam

#endif // MAGSLAM_GEOMETRY_HPP_
