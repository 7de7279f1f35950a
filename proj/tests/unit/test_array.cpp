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

#include <doctest.h>

#include <cmath>

#include "magslam/array.hpp"

using namespace magslam;

namespace {

FieldFn uniform(const Vec3 &f) {
  return [f](const Vec3 &) { return f; };
}

} // namespace

TEST_CASE("default layout") {
  const ArrayLayout l = default_layout_30();
  CHECK(l.n_mag() == 30);
  Vec3 c = Vec3::Zero();
  double mx = 0, my = 0;
  for (const auto &s : l.sensor_positions) {
    c += s;
    mx = std::max(mx, std::abs(s.x()));
    my = std::max(my, std::abs(s.y()));
  }
  CHECK((c / 30.0).norm() < 1e-15);
  CHECK(mx == doctest::Approx(0.1725));
  CHECK(my == doctest::Approx(0.1225));
  CHECK(l.single(7).n_mag() == 1);
  CHECK((l.single(7).sensor_positions[0] - l.sensor_positions[7]).norm() == 0.0);
  CHECK_THROWS(l.single(30));
}

TEST_CASE("measure_forward") {
  const ArrayLayout l = default_layout_30();
  Rng rng(1);
  const Pose id;
  const Calibration ideal = Calibration::identity(30);
  const ArrayMeasurement y = measure_forward(uniform(Vec3::UnitX()), id, l, ideal, 0.0, rng);
  for (int i = 0; i < 30; ++i) {
    CHECK((y.sensor(i) - Vec3::UnitX()).norm() == 0.0);
  }

  Calibration two = ideal;
  for (auto &d : two.scale) {
    d = Vec3::Constant(2.0);
  }
  const ArrayMeasurement y2 = measure_forward(uniform(Vec3::UnitX()), id, l, two, 0.0, rng);
  for (int i = 0; i < 30; ++i) {
    CHECK((y2.sensor(i) - Vec3(0.5, 0, 0)).norm() == 0.0);
  }

  Pose turned;
  turned.rot_bn = exp_rot(Vec3(0, 0, kPi / 2));
  const ArrayMeasurement y3 = measure_forward(uniform(Vec3::UnitX()), turned, l, ideal, 0.0, rng);
  for (int i = 0; i < 30; ++i) {
    CHECK((y3.sensor(i) - turned.rot_bn * Vec3::UnitX()).norm() < 1e-15);
  }

  // Sensors sample the field at p + R^nb s_i.
  const FieldFn lin = [](const Vec3 &p) { return Vec3(p.x(), 0.0, 0.0); };
  Pose moved;
  moved.position = Vec3(1.0, 0.0, 0.0);
  moved.rot_bn = turned.rot_bn;
  const ArrayMeasurement y4 = measure_forward(lin, moved, l, ideal, 0.0, rng);
  for (int i = 0; i < 30; ++i) {
    const Vec3 q = moved.position + moved.rot_bn.transpose() * l.sensor_positions[i];
    CHECK((y4.sensor(i) - moved.rot_bn * Vec3(q.x(), 0, 0)).norm() < 1e-15);
  }

  // Bias enters before the inverse scale.
  Calibration cb = ideal;
  cb.scale[3] = Vec3(2.0, 1.0, 0.5);
  cb.bias[3] = Vec3(1.0, -1.0, 0.5);
  const ArrayMeasurement y5 = measure_forward(uniform(Vec3(1, 2, 3)), id, l, cb, 0.0, rng);
  CHECK((y5.sensor(3) - Vec3(1.0, 1.0, 7.0)).norm() < 1e-15);
  CHECK((apply_calibration(y5.y, cb).segment<3>(9) - Vec3(1, 2, 3)).norm() < 1e-14);
}

TEST_CASE("measurement noise level") {
  const ArrayLayout l = default_layout_30();
  Rng rng(5);
  double acc = 0.0;
  int n = 0;
  for (int k = 0; k < 200; ++k) {
    const ArrayMeasurement y =
        measure_forward(uniform(Vec3::Zero()), Pose{}, l, Calibration::identity(30), 0.1, rng);
    acc += y.y.squaredNorm();
    n += static_cast<int>(y.y.size());
  }
  CHECK(std::sqrt(acc / n) == doctest::Approx(0.1).epsilon(0.03));
}

TEST_CASE("correct_measurement") {
  ArrayMeasurement y;
  y.y = Eigen::VectorXd::Ones(6);
  const auto c1 = correct_measurement(y, {Vec3::Ones(), Vec3::Ones()}, 0.1);
  CHECK((c1.z_input - y.y).norm() == 0.0);
  CHECK((c1.cov_diag.array() - 0.01).abs().maxCoeff() < 1e-15);

  const auto c2 = correct_measurement(y, {Vec3(2, 1, 1), Vec3(1, 3, 0.5)}, 0.1);
  CHECK((c2.z_input.head<3>() - Vec3(2, 1, 1)).norm() == 0.0);
  CHECK(c2.cov_diag[0] == doctest::Approx(0.04));
  CHECK(c2.cov_diag[4] == doctest::Approx(0.09));
  CHECK(c2.cov_diag[5] == doctest::Approx(0.0025));
  CHECK_THROWS(correct_measurement(y, {Vec3::Ones()}, 0.1));
}

TEST_CASE("calibration validation") {
  Calibration c = Calibration::identity(2);
  CHECK_NOTHROW(c.validate());
  c.scale[1].y() = 0.0;
  CHECK_THROWS(c.validate());
  Calibration d = Calibration::identity(2);
  d.bias.pop_back();
  CHECK_THROWS(d.validate());
}
