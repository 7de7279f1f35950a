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
#include <random>
#include <set>

#include "magslam/filter.hpp"
#include "magslam/metrics.hpp"
#include "magslam/simulate.hpp"
#include "common/oracles.hpp"

using namespace magslam;
using magslam::oracle::fd_field_jacobian;

namespace {

double yaw_of(const Mat3 &rot_bn) { return euler_from_rot_bn(rot_bn).z(); }

double unwrap_total_yaw(const std::vector<Pose> &poses) {
  double total = 0.0;
  for (size_t k = 1; k < poses.size(); ++k) {
    double d = yaw_of(poses[k].rot_bn) - yaw_of(poses[k - 1].rot_bn);
    d = std::remainder(d, 2 * kPi);
    total += d;
  }
  return total;
}

} // namespace

TEST_CASE("derive_seed") {
  CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 1; s <= 5; ++s) {
    for (std::uint64_t r = 0; r < 50; ++r) {
      seen.insert(derive_seed(42, s, r));
    }
  }
  CHECK(seen.size() == 250);
  CHECK(derive_seed(1, 1, 0) != derive_seed(2, 1, 0));
}

TEST_CASE("curl-free kernel") {
  const Vec3 r(0.1, -0.2, 0.3);
  const Mat3 k = curl_free_kernel(r, 2.0, 0.5);
  CHECK((k - k.transpose()).norm() < 1e-15);
  CHECK((curl_free_kernel(-r, 2.0, 0.5) - k).norm() < 1e-15);
  // Closed form at zero lag: sigma^2 / l^2 I.
  CHECK((curl_free_kernel(Vec3::Zero(), 2.0, 0.5) - 16.0 * Mat3::Identity()).norm() < 1e-12);
  // Gaussian potential kernel differentiated twice by finite differences.
  const double s2 = 4.0, l2 = 0.25;
  auto kp = [&](const Vec3 &x) { return s2 * std::exp(-0.5 * x.squaredNorm() / l2); };
  const double h = 1e-4;
  Mat3 fd;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      Vec3 ea = Vec3::Zero(), eb = Vec3::Zero();
      ea[a] = h;
      eb[b] = h;
      fd(a, b) = -(kp(r + ea + eb) - kp(r + ea - eb) - kp(r - ea + eb) + kp(r - ea - eb)) /
                 (4 * h * h);
    }
  }
  CHECK((fd - k).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("sample_field without disturbance") {
  FieldSpec spec;
  spec.sigma_cf = 0.0;
  spec.region = DomainBox{Vec3::Constant(-0.5), Vec3::Constant(0.5)};
  const FieldOracle f = sample_field(spec);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int i = 0; i < 10; ++i) {
    const Vec3 p(u(rng), u(rng), u(rng));
    CHECK((f(p) - Vec3(19.2, 0.8, 45.5)).norm() == doctest::Approx(0.0));
  }
  CHECK(f(Vec3(100, 0, 0)).norm() == doctest::Approx(49.39).epsilon(1e-3));
}

TEST_CASE("dense field is curl-free and reproduces its anchors") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::vector<Vec3> anchors;
  for (int i = 0; i < 10; ++i) {
    anchors.emplace_back(u(rng), u(rng), u(rng));
  }
  const FieldOracle f = sample_dense_field(anchors, 1.5, 0.4, Vec3(19.2, 0.8, 45.5), 9);
  for (int t = 0; t < 5; ++t) {
    const Vec3 p(u(rng), u(rng), u(rng));
    const Mat3 j = fd_field_jacobian(f, p);
    CHECK((j - j.transpose()).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((f.jacobian(p) - j).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((f.jacobian(p) - f.jacobian(p).transpose()).cwiseAbs().maxCoeff() < 1e-12);
  }
  for (size_t a = 0; a < anchors.size(); ++a) {
    const Vec3 expect = f.anchor_values().segment<3>(3 * a) + f.earth_field();
    CHECK((f(anchors[a]) - expect).norm() < 1e-8);
  }
  // Same seed, same field.
  const FieldOracle g = sample_dense_field(anchors, 1.5, 0.4, Vec3(19.2, 0.8, 45.5), 9);
  CHECK((g(Vec3(0.1, 0.2, 0.3)) - f(Vec3(0.1, 0.2, 0.3))).norm() == 0.0);
}

TEST_CASE("dense lattice field statistics") {
  FieldSpec spec;
  spec.sigma_cf = 1.0;
  spec.length_scale = 0.5;
  spec.region = DomainBox{Vec3(-0.5, -0.5, 0.0), Vec3(0.5, 0.5, 0.0)};
  spec.seed = 4;
  const auto anchors = anchor_lattice(spec);
  CHECK(anchors.size() > 10);
  const FieldOracle f = sample_field(spec);
  CHECK(f.method() == FieldMethod::Dense);
  // Anchor disturbance variance per axis is sigma^2 / l^2 = 4.
  const Eigen::VectorXd v = f.anchor_values();
  CHECK(v.squaredNorm() / v.size() > 0.5);
  CHECK(v.squaredNorm() / v.size() < 16.0);
}

TEST_CASE("reduced-rank field is curl-free") {
  FieldSpec spec;
  spec.sigma_cf = 1.0;
  spec.length_scale = 0.3;
  spec.region = DomainBox{Vec3(-0.5, -0.5, 0.0), Vec3(0.5, 0.5, 0.0)};
  spec.method = FieldMethod::ReducedRank;
  spec.n_modes = 400;
  spec.seed = 5;
  const FieldOracle f = sample_field(spec);
  CHECK(f.method() == FieldMethod::ReducedRank);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int t = 0; t < 5; ++t) {
    const Vec3 p(u(rng), u(rng), 0.1 * u(rng));
    const Mat3 j = f.jacobian(p);
    CHECK((j - j.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((fd_field_jacobian(f, p) - j).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("motions") {
  MotionSpec m;
  m.kind = MotionKind::CircleNoRotation;
  m.radius = 0.1;
  const auto circle = gen_motion(m);
  CHECK(circle.size() == 1001);
  const Vec3 centre(0, 0.1, 0);
  for (const auto &p : circle) {
    CHECK((p.rot_bn - Mat3::Identity()).norm() == 0.0);
    CHECK(std::abs((p.position - centre).norm() - 0.1) < 1e-12);
  }
  CHECK(circle.front().position.norm() == 0.0);

  m.kind = MotionKind::YawRotationInPlace;
  for (const auto &p : gen_motion(m)) {
    CHECK(p.position.norm() == 0.0);
  }

  m.kind = MotionKind::CircleYawRotation;
  const auto cy = gen_motion(m);
  CHECK(unwrap_total_yaw(cy) * kRadToDeg == doctest::Approx(360.0).epsilon(1e-9));

  for (MotionKind k : {MotionKind::FullRotationInPlace, MotionKind::WigglingInPlace,
                       MotionKind::CircleWiggle, MotionKind::SquareLoop, MotionKind::Snake,
                       MotionKind::InfinityLoop}) {
    m.kind = k;
    m.seed = 3;
    const auto poses = gen_motion(m);
    CHECK(poses.front().position.norm() == 0.0);
    CHECK((poses.front().rot_bn - Mat3::Identity()).norm() < 1e-12);
    for (const auto &p : poses) {
      CHECK(is_rotation(p.rot_bn, 1e-9));
    }
    CHECK(parse_motion(motion_name(k)) == k);
  }
  m.kind = MotionKind::WigglingInPlace;
  double max_tilt = 0.0;
  for (const auto &p : gen_motion(m)) {
    max_tilt = std::max(max_tilt, rotation_angle(p.rot_bn, Mat3::Identity()));
  }
  CHECK(max_tilt * kRadToDeg < 15.0);
  CHECK(max_tilt * kRadToDeg > 2.0);
  CHECK(paper_motions().size() == 6);
  CHECK_THROWS(parse_motion("moonwalk"));
}

TEST_CASE("square loop geometry") {
  MotionSpec m;
  m.kind = MotionKind::SquareLoop;
  m.side = 1.0;
  m.speed = 0.2;
  m.laps = 1.0;
  m.turn_at_corners = false;
  m.duration = 20.0;
  const auto sq = gen_motion(m);
  CHECK(sq.back().position.norm() < 1e-9);
  double max_x = 0, max_y = 0;
  for (const auto &p : sq) {
    max_x = std::max(max_x, p.position.x());
    max_y = std::max(max_y, p.position.y());
  }
  CHECK(max_x == doctest::Approx(1.0));
  CHECK(max_y == doctest::Approx(1.0));
}

TEST_CASE("sample_calibration") {
  const Calibration a = sample_calibration(30, 1);
  const Calibration b = sample_calibration(30, 1);
  const Calibration c = sample_calibration(30, 2);
  for (int i = 0; i < 30; ++i) {
    CHECK((a.scale[i].array() >= 0.9).all());
    CHECK((a.scale[i].array() <= 1.1).all());
    CHECK((a.bias[i].array() >= -1.5).all());
    CHECK((a.bias[i].array() <= 1.5).all());
    CHECK(a.scale[i] == b.scale[i]);
    CHECK(a.bias[i] == b.bias[i]);
  }
  CHECK(a.scale[0] != c.scale[0]);
}

TEST_CASE("make_dataset") {
  MotionSpec m;
  m.kind = MotionKind::CircleYawRotation;
  m.duration = 10.0;
  const auto truth = gen_motion(m);
  const ArrayLayout layout = default_layout_30();
  const FieldOracle earth(Vec3(19.2, 0.8, 45.5));

  SimNoise none;
  none.sigma_pos.setZero();
  none.sigma_rot.setZero();
  none.sigma_y = 0.0;
  const Dataset exact = make_dataset(earth.as_function(), truth, layout,
                                     Calibration::identity(30), none, 10.0, 1);
  const auto dr = dead_reckoning(exact);
  for (size_t k = 0; k < truth.size(); ++k) {
    CHECK((dr[k].position - truth[k].position).norm() < 1e-10);
    CHECK(rotation_angle(dr[k].rot_bn, truth[k].rot_bn) < 1e-10);
  }

  // Per-step noise scales with the rate: 0.01 m/s -> 1 mm, 0.1 deg/s -> 0.01 deg.
  MotionSpec still;
  still.kind = MotionKind::YawRotationInPlace;
  still.yaw_amplitude_deg = 0.0;
  still.duration = 500.0;
  const auto rest = gen_motion(still);
  SimNoise six;
  const Dataset noisy =
      make_dataset(earth.as_function(), rest, layout, Calibration::identity(30), six, 10.0, 2);
  double sp = 0.0, sr = 0.0;
  for (int k = 0; k < noisy.n_steps(); ++k) {
    sp += noisy.odom_dp[k].squaredNorm();
    sr += log_rot(noisy.odom_drot[k]).squaredNorm();
  }
  sp = std::sqrt(sp / (3.0 * noisy.n_steps()));
  sr = std::sqrt(sr / (3.0 * noisy.n_steps()));
  CHECK(sp == doctest::Approx(1e-3).epsilon(0.05));
  CHECK(sr * kRadToDeg == doctest::Approx(0.01).epsilon(0.05));

  // Drift metadata.
  SimNoise drift;
  drift.offset_pos = Vec3(-50, 50, 0) * 1e-3;
  drift.offset_rot = Vec3(0, 0, 1) * kDegToRad;
  const Dataset d =
      make_dataset(earth.as_function(), truth, layout, Calibration::identity(30), drift, 10.0, 3);
  CHECK(d.metadata["o_pos"][0].get<double>() == doctest::Approx(-0.05));
  CHECK(d.metadata["o_pos"][1].get<double>() == doctest::Approx(0.05));
  CHECK(d.metadata["o_rot"][2].get<double>() == doctest::Approx(kDegToRad));
  CHECK(d.calib_true.has_value());
}

TEST_CASE("dead reckoning drift accumulation") {
  // Straight line, identity attitude, constant body offset.
  std::vector<Pose> line;
  for (int k = 0; k <= 823; ++k) {
    line.push_back(Pose{Vec3(0.01 * k, 0, 0), Mat3::Identity()});
  }
  SimNoise drift;
  drift.sigma_pos.setZero();
  drift.sigma_rot.setZero();
  drift.sigma_y = 0.0;
  drift.offset_pos = Vec3(-50, 50, 0) * 1e-3;
  const FieldOracle earth(Vec3(19.2, 0.8, 45.5));
  const Dataset d = make_dataset(earth.as_function(), line, default_layout_30(),
                                 Calibration::identity(30), drift, 10.0, 4);
  const auto dr = dead_reckoning(d);
  const double err = (dr.back().position - line.back().position).norm();
  CHECK(err == doctest::Approx(823 * 0.1 * drift.offset_pos.norm()).epsilon(1e-9));
  CHECK(err == doctest::Approx(5.82).epsilon(1e-3));
}

TEST_CASE("consistency experiment") {
  MotionSpec m;
  m.kind = MotionKind::FullRotationInPlace;
  m.duration = 20.0;
  m.seed = 1;
  const auto motion = gen_motion(m);
  const FieldOracle earth(Vec3(19.2, 0.8, 45.5));
  const Calibration truth = sample_calibration(30, 7);
  const auto series = consistency_experiment({truth, Calibration::identity(30)}, truth, earth,
                                             motion, 0.1, 11);
  REQUIRE(series.corrected.size() == 2);
  // Exact calibration: corrected norms within the noise floor of the reference.
  double worst = 0.0;
  for (int k = 0; k < series.corrected[0].rows(); ++k) {
    for (int i = 0; i < 30; ++i) {
      worst = std::max(worst, std::abs(series.corrected[0](k, i) - series.reference[k]));
    }
  }
  CHECK(worst < 0.1 * 1.1 * 6.0);
  // Identity calibration leaves the bias-induced spread.
  const auto est = consistency_stats(series.corrected[1]);
  const auto raw = consistency_stats(series.uncalibrated);
  CHECK(est.median_range == doctest::Approx(raw.median_range));
  CHECK(raw.median_range > consistency_stats(series.corrected[0]).median_range);

  const auto noiseless = consistency_experiment({truth}, truth, earth, motion, 0.0, 11);
  for (int k = 0; k < noiseless.corrected[0].rows(); ++k) {
    for (int i = 0; i < 30; ++i) {
      CHECK(std::abs(noiseless.corrected[0](k, i) - noiseless.reference[k]) < 1e-10);
    }
  }
}
