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

#include <random>

#include "common/oracles.hpp"
#include "magslam/filter.hpp"
#include "magslam/simulate.hpp"

using namespace magslam;
namespace orc = magslam::oracle;

using orc::info_from_cov;

TEST_CASE("init_filter") {
  GpHyper hyper;
  hyper.length_scale = 0.5;
  const BasisSet basis = build_basis(DomainBox{Vec3::Constant(-1), Vec3::Constant(1)}, 20, hyper);
  const ArrayLayout layout = default_layout_30();
  NoiseConfig noise;
  noise.prior_scale_var = 0.001 * 0.001;

  auto [s1, i1] = init_filter(noise, hyper, basis, layout, FilterMode::Slamma);
  CHECK(i1.mat.rows() == 6 + basis.n_weights());
  CHECK_FALSE(s1.calib.has_value());
  for (int i = 0; i < 6; ++i) {
    CHECK(i1.mat(i, i) == 1e12);
  }
  CHECK(i1.mat(6, 6) == doctest::Approx(1.0 / (hyper.sigma_lin * hyper.sigma_lin)));

  auto [s2, i2] = init_filter(noise, hyper, basis, layout, FilterMode::Slcamma);
  const StateLayout sl = state_layout(basis, layout, FilterMode::Slcamma);
  CHECK(i2.mat.rows() == 6 + basis.n_weights() + 180);
  CHECK(i2.mat(sl.scale(), sl.scale()) == doctest::Approx(1e6));
  CHECK(i2.mat(sl.bias(), sl.bias()) == doctest::Approx(1.0 / noise.prior_bias_var));
  REQUIRE(s2.calib.has_value());
  CHECK(s2.calib->scale[5] == Vec3::Ones());
}

TEST_CASE("retract and state_difference are inverse") {
  std::mt19937_64 rng(21);
  orc::Instance inst = orc::random_instance(rng, 5, 2, true);
  const StateLayout sl{static_cast<int>(inst.state.weights.size()), 2, true};
  std::normal_distribution<double> nd(0.0, 0.1);
  Eigen::VectorXd dx(sl.dim());
  for (int i = 0; i < dx.size(); ++i) {
    dx[i] = nd(rng);
  }
  FilterState y = inst.state;
  retract(y, sl, dx);
  CHECK((state_difference(y, inst.state, sl) - dx).norm() < 1e-12);
  CHECK((orc::minus(y, inst.state) - dx).norm() < 1e-12);
}

TEST_CASE("mag Jacobian against finite differences") {
  std::mt19937_64 rng(22);
  for (bool calibrated : {false, true}) {
    for (int t = 0; t < 5; ++t) {
      orc::Instance inst = orc::random_instance(rng, 12, 3, calibrated);
      const Eigen::MatrixXd h = mag_jacobian(inst.state, inst.layout, inst.basis, inst.y);
      const Eigen::MatrixXd fd = orc::fd_jacobian(inst.state, inst.layout, inst.basis, inst.y);
      CHECK(orc::rel_error(h, fd) < 1e-6);
      CHECK((mag_residual(inst.state, inst.layout, inst.basis, inst.y) -
             orc::residual(inst.state, inst.layout, inst.basis, inst.y))
                .norm() < 1e-10);
    }
  }
}

TEST_CASE("mag Jacobian special cases") {
  std::mt19937_64 rng(23);
  orc::Instance inst = orc::random_instance(rng, 8, 2, false);
  inst.state.weights.setZero();
  const Eigen::MatrixXd h = mag_jacobian(inst.state, inst.layout, inst.basis, inst.y);
  CHECK(h.leftCols<6>().cwiseAbs().maxCoeff() == 0.0);
  for (int i = 0; i < 2; ++i) {
    const Vec3 q = inst.state.position + inst.state.rot_bn.transpose() *
                                             inst.layout.sensor_positions[i];
    const Eigen::MatrixXd expect = -inst.state.rot_bn * inst.basis.grad_phi(q);
    CHECK((h.block(3 * i, 6, 3, inst.basis.n_weights()) - expect).norm() < 1e-13);
  }

  // A sensor at the body origin: H_eta reduces to [f x].
  orc::Instance o = orc::random_instance(rng, 8, 1, false);
  o.layout.sensor_positions[0].setZero();
  const Eigen::MatrixXd ho = mag_jacobian(o.state, o.layout, o.basis, o.y);
  const Vec3 f = o.state.rot_bn * (o.basis.grad_phi(o.state.position) * o.state.weights);
  CHECK((ho.block<3, 3>(0, 3) - skew(f)).norm() < 1e-12);
}

TEST_CASE("dynamic update matches the covariance-form prediction") {
  std::mt19937_64 rng(24);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (bool calibrated : {false, true}) {
    for (int t = 0; t < 5; ++t) {
      orc::Instance inst = orc::random_instance(rng, 5, 2, calibrated);
      const int n = orc::dim_of(inst.state);
      REQUIRE(n <= 30);
      const Eigen::MatrixXd p = orc::random_spd(n, 0.05, 2.0, rng);
      InfoForm info = info_from_cov(p);
      const Vec3 dp(0.3 * nd(rng), 0.3 * nd(rng), 0.1 * nd(rng));
      const Mat3 drot = exp_rot(Vec3(0.2 * nd(rng), 0.2 * nd(rng), 0.2 * nd(rng)));
      const Eigen::MatrixXd q6 = orc::random_spd(6, 0.01, 0.5, rng);
      const Mat3 qp = q6.topLeftCorner<3, 3>();
      const Mat3 qr = q6.bottomRightCorner<3, 3>();
      Eigen::MatrixXd q = Eigen::MatrixXd::Zero(6, 6);
      q.topLeftCorner<3, 3>() = qp;
      q.bottomRightCorner<3, 3>() = qr;

      const Eigen::MatrixXd f = orc::transition(inst.state, dp);
      const Eigen::MatrixXd g = orc::noise_input(inst.state);
      const Eigen::MatrixXd p_pred = f * p * f.transpose() + g * q * g.transpose();
      const FilterState x_pred = orc::propagate(inst.state, dp, drot);

      FilterState x = inst.state;
      dynamic_update(x, info, dp, drot, qp, qr);
      CHECK(orc::rel_error(orc::inverse_spd(info.mat), p_pred) < 1e-6);
      CHECK(orc::minus(x, x_pred).norm() < 1e-12);
      CHECK(info.vec.norm() == 0.0);
      CHECK(info.asymmetry < 1e-10);
    }
  }
}

TEST_CASE("error-state transition against finite differences") {
  std::mt19937_64 rng(30);
  orc::Instance inst = orc::random_instance(rng, 5, 2, true);
  const Vec3 dp(0.2, -0.1, 0.05);
  const Mat3 drot = exp_rot(Vec3(0.05, -0.02, 0.1));
  const Eigen::MatrixXd fd = orc::fd_transition(inst.state, dp, drot);
  Eigen::MatrixXd f = orc::transition(inst.state, dp);
  CHECK(orc::rel_error(f.leftCols<3>(), fd.leftCols<3>()) < 1e-8);
  CHECK(orc::rel_error(f.topRows<3>(), fd.topRows<3>()) < 1e-8);
  CHECK(orc::rel_error(f.bottomRightCorner(f.rows() - 6, f.cols() - 6),
                       fd.bottomRightCorner(f.rows() - 6, f.cols() - 6)) < 1e-8);
  // Attitude block: exactly dR, approximated by the identity.
  CHECK((fd.block<3, 3>(3, 3) - drot).norm() < 1e-8);
}

TEST_CASE("dynamic update limits") {
  std::mt19937_64 rng(25);
  orc::Instance inst = orc::random_instance(rng, 5, 2, false);
  const int n = orc::dim_of(inst.state);
  const Eigen::MatrixXd p = orc::random_spd(n, 0.1, 1.0, rng);
  InfoForm info = info_from_cov(p);
  const InfoForm before = info;
  FilterState x = inst.state;
  const Mat3 tiny = Mat3::Identity() * 1e-12;
  dynamic_update(x, info, Vec3::Zero(), Mat3::Identity(), tiny, tiny);
  CHECK(orc::minus(x, inst.state).norm() < 1e-14);
  CHECK(orc::rel_error(info.mat, before.mat) < 1e-4);

  FilterState origin;
  origin.weights = Eigen::VectorXd::Zero(8);
  InfoForm i2 = info_from_cov(Eigen::MatrixXd::Identity(14, 14));
  dynamic_update(origin, i2, Vec3(1, 0, 0), Mat3::Identity(), tiny, tiny);
  CHECK((origin.position - Vec3(1, 0, 0)).norm() < 1e-15);
}

TEST_CASE("vertical update") {
  std::mt19937_64 rng(26);
  for (bool calibrated : {false, true}) {
    orc::Instance inst = orc::random_instance(rng, 5, 2, calibrated);
    const int n = orc::dim_of(inst.state);
    const Eigen::MatrixXd p = orc::random_spd(n, 0.05, 2.0, rng);

    // Covariance-form scalar update; residual convention z = p_z - y.
    const double y_ver = inst.state.position.z() + 0.07;
    const double sigma_ver = 0.01;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(1, n);
    h(0, 2) = 1.0;
    Eigen::VectorXd z(1);
    z[0] = inst.state.position.z() - y_ver;
    Eigen::MatrixXd p_post;
    const Eigen::VectorXd dx =
        orc::kalman_update(p, h, z, Eigen::VectorXd::Constant(1, sigma_ver), p_post);

    InfoForm info = info_from_cov(p);
    FilterState x = inst.state;
    vertical_update(x, info, y_ver, sigma_ver);
    CHECK(orc::rel_error(orc::inverse_spd(info.mat), p_post) < 1e-8);
    CHECK((orc::minus(x, inst.state) - dx).norm() / dx.norm() < 1e-8);

    // Zero residual.
    InfoForm i2 = info_from_cov(p);
    FilterState x2 = inst.state;
    vertical_update(x2, i2, inst.state.position.z(), sigma_ver);
    CHECK(orc::minus(x2, inst.state).norm() < 1e-14);

    // Measurement dominance.
    InfoForm i3 = info_from_cov(p);
    FilterState x3 = inst.state;
    vertical_update(x3, i3, y_ver, 1e-12);
    CHECK(std::abs(x3.position.z() - y_ver) < 1e-6);
  }
}

TEST_CASE("single-iteration mag update matches the covariance-form EKF") {
  std::mt19937_64 rng(27);
  for (bool calibrated : {false, true}) {
    for (int t = 0; t < 5; ++t) {
      orc::Instance inst = orc::random_instance(rng, 5, 2, calibrated);
      const int n = orc::dim_of(inst.state);
      REQUIRE(n <= 30);
      const Eigen::MatrixXd p = orc::random_spd(n, 0.01, 1.0, rng);
      const double sigma_y = 0.5;

      const Eigen::MatrixXd h = mag_jacobian(inst.state, inst.layout, inst.basis, inst.y);
      const Eigen::VectorXd z = orc::residual(inst.state, inst.layout, inst.basis, inst.y);
      const Eigen::VectorXd r = orc::noise_var(inst.state, 2, sigma_y);
      Eigen::MatrixXd p_post;
      const Eigen::VectorXd dx = orc::kalman_update(p, h, z, r, p_post);

      InfoForm info = info_from_cov(p);
      FilterState x = inst.state;
      IterationOptions one;
      one.tau_max = 1;
      one.max_position_step = 1e6;
      const MagUpdateResult res =
          mag_update_iterated(x, info, inst.y, inst.layout, inst.basis, sigma_y, one);
      CHECK(res.iterations == 1);
      CHECK(orc::rel_error(orc::inverse_spd(info.mat), p_post) < 1e-6);
      CHECK((orc::minus(x, inst.state) - dx).norm() / dx.norm() < 1e-6);
    }
  }
}

TEST_CASE("iterated update from the truth stops after one iteration") {
  std::mt19937_64 rng(28);
  GpHyper hyper;
  hyper.length_scale = 0.4;
  const DomainBox box{Vec3(-1, -1, -0.5), Vec3(1, 1, 0.5)};
  auto basis = std::make_shared<BasisSet>(build_basis(box, 60, hyper));
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::VectorXd w(basis->n_weights());
  w.head<3>() = Vec3(19.2, 0.8, 45.5);
  for (int j = 3; j < w.size(); ++j) {
    w[j] = 2.0 * nd(rng);
  }
  const FieldOracle field(Vec3::Zero(), basis, w);
  const ArrayLayout layout = default_layout_30();
  const Calibration calib = sample_calibration(30, 5);
  Pose pose{Vec3(0.1, -0.2, 0.05), exp_rot(Vec3(0.1, 0.2, 0.3))};
  Rng mrng(1);
  const ArrayMeasurement y = measure_forward(field.as_function(), pose, layout, calib, 0.0, mrng);

  FilterState x;
  x.position = pose.position;
  x.rot_bn = pose.rot_bn;
  x.weights = w;
  x.calib = calib;
  const int n = orc::dim_of(x);
  InfoForm info = info_from_cov(Eigen::MatrixXd::Identity(n, n) * 0.01);
  const MagUpdateResult res = mag_update_iterated(x, info, y, layout, *basis, 0.1);
  CHECK(res.iterations == 1);
  CHECK(res.converged);
  CHECK(res.last_step_norm < 1e-10);

  // Known map and calibration, 1 cm position offset: the update reduces it.
  FilterState off;
  off.position = pose.position + Vec3(0.01, 0.0, 0.0);
  off.rot_bn = pose.rot_bn;
  off.weights = w;
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(6 + w.size(), 6 + w.size());
  p.diagonal().head<3>().setConstant(0.02 * 0.02);
  p.diagonal().segment<3>(3).setConstant(1e-10);
  p.diagonal().tail(w.size()).setConstant(1e-10);
  InfoForm i2 = info_from_cov(p);
  Rng nrng(2);
  const ArrayMeasurement yc = measure_forward(field.as_function(), pose, layout,
                                              Calibration::identity(30), 0.1, nrng);
  mag_update_iterated(off, i2, yc, layout, *basis, 0.1);
  CHECK((off.position - pose.position).norm() < 0.01);
  CHECK((off.position - pose.position).norm() < 0.003);
}

TEST_CASE("solve_spd and asymmetry") {
  std::mt19937_64 rng(29);
  const Eigen::MatrixXd a = orc::random_spd(12, 1e-3, 1e3, rng);
  Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(12, -1, 1);
  CHECK((a * solve_spd(a, b) - b).norm() < 1e-9);
  Eigen::MatrixXd asym = a;
  asym(0, 1) += 1.0;
  CHECK(relative_asymmetry(asym) > 0.0);
  CHECK(relative_asymmetry(a) < 1e-15);
  CHECK_THROWS_AS(solve_spd(-Eigen::MatrixXd::Identity(3, 3), Eigen::VectorXd::Ones(3)),
                  DivergenceError);
}
