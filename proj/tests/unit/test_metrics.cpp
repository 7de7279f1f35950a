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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "magslam/metrics.hpp"

using namespace magslam;

namespace {

Calibration random_calib(int n, std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  Calibration c;
  for (int i = 0; i < n; ++i) {
    c.scale.emplace_back(1 + 0.1 * u(rng), 1 + 0.1 * u(rng), 1 + 0.1 * u(rng));
    c.bias.emplace_back(u(rng), u(rng), u(rng));
  }
  return c;
}

} // namespace

TEST_CASE("calib_mae_std trivial cases") {
  std::mt19937_64 rng(1);
  const Calibration t = random_calib(3, rng);
  const auto exact = calib_mae_std({{t, t, t}}, {t});
  CHECK(exact.n_steps() == 3);
  CHECK(exact.mae_scale.cwiseAbs().maxCoeff() == 0.0);
  CHECK(exact.std_bias.cwiseAbs().maxCoeff() == 0.0);

  Calibration one = Calibration::identity(1);
  Calibration off = one;
  off.bias[0] += Vec3::Constant(0.5);
  off.scale[0] += Vec3::Constant(0.5);
  const auto c = calib_mae_std({{off, off}}, {one});
  for (int k = 0; k < 2; ++k) {
    for (int a = 0; a < 4; ++a) {
      CHECK(c.mae_bias(k, a) == doctest::Approx(0.5));
      CHECK(c.mae_scale(k, a) == doctest::Approx(0.5));
    }
    CHECK(c.std_bias(k, 0) == doctest::Approx(0.5));
  }
}

TEST_CASE("calib_mae_std against direct summation") {
  std::mt19937_64 rng(2);
  const int n_rep = 3, n_mag = 2, n_k = 4;
  std::vector<Calibration> truths;
  std::vector<std::vector<Calibration>> hist(n_rep);
  for (int j = 0; j < n_rep; ++j) {
    truths.push_back(random_calib(n_mag, rng));
    for (int k = 0; k < n_k; ++k) {
      hist[j].push_back(random_calib(n_mag, rng));
    }
  }
  const auto c = calib_mae_std(hist, truths);
  for (int k = 0; k < n_k; ++k) {
    double all_abs = 0.0, all_sq = 0.0;
    for (int a = 0; a < 3; ++a) {
      double abs_sum = 0.0, sq_sum = 0.0;
      for (int j = 0; j < n_rep; ++j) {
        for (int i = 0; i < n_mag; ++i) {
          const double e = hist[j][k].bias[i][a] - truths[j].bias[i][a];
          abs_sum += std::abs(e);
          sq_sum += e * e;
        }
      }
      CHECK(c.mae_bias(k, a) == doctest::Approx(abs_sum / (n_rep * n_mag)).epsilon(1e-14));
      CHECK(c.std_bias(k, a) ==
            doctest::Approx(std::sqrt(sq_sum / (n_rep * n_mag))).epsilon(1e-14));
      all_abs += abs_sum;
      all_sq += sq_sum;
    }
    CHECK(c.mae_bias(k, 3) == doctest::Approx(all_abs / (3 * n_rep * n_mag)).epsilon(1e-14));
    CHECK(c.std_bias(k, 3) == doctest::Approx(std::sqrt(all_sq / (n_rep * n_mag))).epsilon(1e-14));
  }
  CHECK_THROWS(calib_mae_std(hist, {truths[0]}));
}

TEST_CASE("calib errors CSV round trip") {
  std::mt19937_64 rng(3);
  const Calibration t = random_calib(2, rng);
  const auto c = calib_mae_std({{random_calib(2, rng), random_calib(2, rng)}}, {t});
  const auto path = (std::filesystem::temp_directory_path() / "magslam_calib_err.csv").string();
  write_calib_errors_csv(c, path);
  const auto r = read_calib_errors_csv(path);
  CHECK((r.mae_bias - c.mae_bias).norm() == 0.0);
  CHECK((r.std_scale - c.std_scale).norm() == 0.0);
}

TEST_CASE("traj_errors") {
  std::vector<Pose> gt;
  for (int k = 0; k < 5; ++k) {
    gt.push_back(Pose{Vec3(k, 0, 0), exp_rot(Vec3(0, 0, 0.1 * k))});
  }
  const TrajError zero = traj_errors(gt, gt);
  CHECK(zero.final_position == 0.0);
  CHECK(zero.rmse_rotation_deg < 1e-6);

  std::vector<Pose> est = gt;
  for (auto &p : est) {
    p.position += Vec3(3, 4, 0);
    p.rot_bn = exp_rot(Vec3(0, 0, 10 * kDegToRad)) * p.rot_bn;
  }
  const TrajError e = traj_errors(est, gt);
  CHECK(e.final_position == doctest::Approx(5.0));
  CHECK(e.rmse_position == doctest::Approx(5.0));
  CHECK(e.final_rotation_deg == doctest::Approx(10.0));
  CHECK(e.position.size() == 5);
  CHECK_THROWS(traj_errors(est, std::vector<Pose>(gt.begin(), gt.end() - 1)));
}

TEST_CASE("drift_reduction") {
  TrajError base, est;
  base.final_position = 10.0;
  base.rmse_position = 4.0;
  CHECK(drift_reduction(base, base).final_pct == doctest::Approx(0.0));
  est.final_position = 0.0;
  est.rmse_position = 1.0;
  CHECK(drift_reduction(est, base).final_pct == doctest::Approx(100.0));
  CHECK(drift_reduction(est, base).rmse_pct == doctest::Approx(75.0));
  est.final_position = 1.6;
  CHECK(drift_reduction(est, base).final_pct == doctest::Approx(84.0));
  TrajError zero;
  CHECK_THROWS(drift_reduction(est, zero));
}

TEST_CASE("consistency_stats") {
  Eigen::MatrixXd same = Eigen::MatrixXd::Constant(4, 3, 50.0);
  CHECK(consistency_stats(same).median_range == 0.0);
  Eigen::MatrixXd two(2, 2);
  two << 50, 51, 49, 50;
  const auto s = consistency_stats(two);
  CHECK(s.range[0] == doctest::Approx(1.0));
  CHECK(s.median_range == doctest::Approx(1.0));
  CHECK(s.std[0] == doctest::Approx(0.5));

  // Order-statistics oracle: the range of 30 N(0, 0.1^2) draws has
  // median near 0.1 * 4.03 (sampled independently below).
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 0.1);
  Eigen::MatrixXd draws(2000, 30);
  for (int k = 0; k < draws.rows(); ++k) {
    for (int i = 0; i < 30; ++i) {
      draws(k, i) = 49.39 + n(rng);
    }
  }
  std::vector<double> oracle;
  std::mt19937_64 rng2(5);
  for (int t = 0; t < 2000; ++t) {
    double lo = 1e9, hi = -1e9;
    for (int i = 0; i < 30; ++i) {
      const double v = n(rng2);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    oracle.push_back(hi - lo);
  }
  CHECK(consistency_stats(draws).median_range == doctest::Approx(median(oracle)).epsilon(0.03));
  CHECK_THROWS(consistency_stats(Eigen::MatrixXd::Zero(3, 1)));
}

TEST_CASE("median") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  CHECK_THROWS(median({}));
}
