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

#include "magslam/geometry.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

namespace magslam {

Mat3 skew(const Vec3 &v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
      -v.y(), v.x(), 0.0;
  return s;
}

Mat3 exp_rot(const Vec3 &v) {
  const double angle = v.norm();
  const Mat3 k = skew(v);
  if (angle < kSmallAngle) {
    return Mat3::Identity() + k + 0.5 * k * k;
  }
  const double half_sin = std::sin(0.5 * angle);
  const double a = std::sin(angle) / angle;
  const double b = 2.0 * half_sin * half_sin / (angle * angle);
  return Mat3::Identity() + a * k + b * k * k;
}

Vec3 log_rot(const Mat3 &r) {
  const Vec3 vee(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  const double sin_norm = 0.5 * vee.norm();
  const double cos_angle = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
  const double angle = std::atan2(sin_norm, cos_angle);
  if (angle < kSmallAngle) {
    return 0.5 * vee;
  }
  if (kPi - angle > 1e-6) {
    return (angle / (2.0 * std::sin(angle))) * vee;
  }
  // Near pi the antisymmetric part vanishes; recover the axis from r + I.
  Eigen::AngleAxisd aa(r);
  return aa.angle() * aa.axis();
}

double rotation_angle(const Mat3 &a, const Mat3 &b) {
  const Mat3 rel = a * b.transpose();
  const Vec3 vee(rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0),
                 rel(1, 0) - rel(0, 1));
  const double cos_angle = std::clamp(0.5 * (rel.trace() - 1.0), -1.0, 1.0);
  return std::atan2(0.5 * vee.norm(), cos_angle);
}

Mat3 orthonormalize(const Mat3 &r) {
  Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3 &v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) {
    u.col(2) = -u.col(2);
  }
  return u * v.transpose();
}

bool is_rotation(const Mat3 &r, double tol) {
  if (!r.allFinite()) {
    return false;
  }
  return (r.transpose() * r - Mat3::Identity()).norm() < tol &&
         std::abs(r.determinant() - 1.0) < tol;
}

Mat3 rot_bn_from_euler(double roll, double pitch, double yaw) {
  const Mat3 rot_nb = (Eigen::AngleAxisd(yaw, Vec3::UnitZ()) *
                       Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
                       Eigen::AngleAxisd(roll, Vec3::UnitX()))
                          .toRotationMatrix();
  return rot_nb.transpose();
}

Vec3 euler_from_rot_bn(const Mat3 &rot_bn) {
  const Mat3 n = rot_bn.transpose();
  const double pitch = std::asin(std::clamp(-n(2, 0), -1.0, 1.0));
  const double roll = std::atan2(n(2, 1), n(2, 2));
  const double yaw = std::atan2(n(1, 0), n(0, 0));
  return {roll, pitch, yaw};
}

} // namespace magslam
