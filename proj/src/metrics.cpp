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

#include "magslam/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "magslam/csv.hpp"

namespace magslam {

namespace {

constexpr const char *kAxisNames[4] = {"x", "y", "z", "all"};

} // namespace

CalibErrorCurve calib_mae_std(const std::vector<std::vector<Calibration>> &histories,
                              const std::vector<Calibration> &truths) {
  if (histories.empty() || histories.size() != truths.size()) {
    throw std::invalid_argument("calib_mae_std: need one truth per non-empty history set");
  }
  const size_t k_steps = histories.front().size();
  const int n_mag = truths.front().n_mag();
  for (size_t j = 0; j < histories.size(); ++j) {
    if (histories[j].size() != k_steps || truths[j].n_mag() != n_mag) {
      throw std::invalid_argument("calib_mae_std: replicates differ in shape");
    }
    for (const auto &c : histories[j]) {
      if (c.n_mag() != n_mag) {
        throw std::invalid_argument("calib_mae_std: sensor count mismatch");
      }
    }
  }
  const double norm = 1.0 / (static_cast<double>(histories.size()) * n_mag);
  CalibErrorCurve out;
  for (auto *m : {&out.mae_scale, &out.std_scale, &out.mae_bias, &out.std_bias}) {
    m->setZero(static_cast<Eigen::Index>(k_steps), 4);
  }
  for (size_t k = 0; k < k_steps; ++k) {
    Eigen::Array3d abs_d = Eigen::Array3d::Zero(), sq_d = Eigen::Array3d::Zero();
    Eigen::Array3d abs_b = Eigen::Array3d::Zero(), sq_b = Eigen::Array3d::Zero();
    for (size_t j = 0; j < histories.size(); ++j) {
      const Calibration &est = histories[j][k];
      for (int i = 0; i < n_mag; ++i) {
        const Eigen::Array3d ed = (est.scale[i] - truths[j].scale[i]).array();
        const Eigen::Array3d eb = (est.bias[i] - truths[j].bias[i]).array();
        abs_d += ed.abs();
        sq_d += ed.square();
        abs_b += eb.abs();
        sq_b += eb.square();
      }
    }
    const auto row = static_cast<Eigen::Index>(k);
    for (int a = 0; a < 3; ++a) {
      out.mae_scale(row, a) = norm * abs_d[a];
      out.std_scale(row, a) = std::sqrt(norm * sq_d[a]);
      out.mae_bias(row, a) = norm * abs_b[a];
      out.std_bias(row, a) = std::sqrt(norm * sq_b[a]);
    }
    out.mae_scale(row, 3) = norm * abs_d.sum() / 3.0;
    out.std_scale(row, 3) = std::sqrt(norm * sq_d.sum());
    out.mae_bias(row, 3) = norm * abs_b.sum() / 3.0;
    out.std_bias(row, 3) = std::sqrt(norm * sq_b.sum());
  }
  return out;
}

void write_calib_errors_csv(const CalibErrorCurve &curve, const std::string &path) {
  CsvWriter w(path, {"k", "param", "axis", "mae", "std"});
  for (int k = 0; k < curve.n_steps(); ++k) {
    for (int p = 0; p < 2; ++p) {
      const Eigen::MatrixXd &mae = p == 0 ? curve.mae_scale : curve.mae_bias;
      const Eigen::MatrixXd &sd = p == 0 ? curve.std_scale : curve.std_bias;
      for (int a = 0; a < 4; ++a) {
        w << k << std::string(p == 0 ? "d" : "b") << std::string(kAxisNames[a]) << mae(k, a)
          << sd(k, a);
        w.end_row();
      }
    }
  }
}

CalibErrorCurve read_calib_errors_csv(const std::string &path) {
  const CsvTable t = read_csv(path);
  t.require_columns({"k", "param", "axis", "mae", "std"});
  int k_max = -1;
  for (size_t r = 0; r < t.n_rows(); ++r) {
    k_max = std::max(k_max, static_cast<int>(t.num(r, 0)));
  }
  CalibErrorCurve out;
  for (auto *m : {&out.mae_scale, &out.std_scale, &out.mae_bias, &out.std_bias}) {
    m->setZero(k_max + 1, 4);
  }
  for (size_t r = 0; r < t.n_rows(); ++r) {
    const int k = static_cast<int>(t.num(r, 0));
    const std::string &param = t.text(r, 1);
    const std::string &axis = t.text(r, 2);
    const auto it = std::find(std::begin(kAxisNames), std::end(kAxisNames), axis);
    if (it == std::end(kAxisNames) || (param != "d" && param != "b")) {
      throw DataError(path + ": unknown param/axis at row " + std::to_string(r + 1));
    }
    const int a = static_cast<int>(it - std::begin(kAxisNames));
    (param == "d" ? out.mae_scale : out.mae_bias)(k, a) = t.num(r, 3);
    (param == "d" ? out.std_scale : out.std_bias)(k, a) = t.num(r, 4);
  }
  return out;
}

TrajError traj_errors(const std::vector<Pose> &estimate, const std::vector<Pose> &truth) {
  if (estimate.size() != truth.size() || truth.empty()) {
    throw std::invalid_argument("traj_errors: sequences must be non-empty and aligned");
  }
  TrajError e;
  double sp = 0.0, sr = 0.0;
  for (size_t k = 0; k < truth.size(); ++k) {
    const double dp = (estimate[k].position - truth[k].position).norm();
    const double dr = rotation_angle(estimate[k].rot_bn, truth[k].rot_bn) * kRadToDeg;
    e.position.push_back(dp);
    e.rotation_deg.push_back(dr);
    sp += dp * dp;
    sr += dr * dr;
  }
  const double n = static_cast<double>(truth.size());
  e.final_position = e.position.back();
  e.final_rotation_deg = e.rotation_deg.back();
  e.rmse_position = std::sqrt(sp / n);
  e.rmse_rotation_deg = std::sqrt(sr / n);
  return e;
}

DriftReduction drift_reduction(const TrajError &est, const TrajError &baseline) {
  if (!(baseline.final_position > 0.0) || !(baseline.rmse_position > 0.0)) {
    throw std::invalid_argument("drift_reduction: baseline error must be positive");
  }
  return {100.0 * (1.0 - est.final_position / baseline.final_position),
          100.0 * (1.0 - est.rmse_position / baseline.rmse_position)};
}

double median(std::vector<double> v) {
  if (v.empty()) {
    throw std::invalid_argument("median of an empty sequence");
  }
  const size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) {
    return hi;
  }
  const double lo = *std::max_element(v.begin(), v.begin() + mid);
  return 0.5 * (lo + hi);
}

ConsistencyStats consistency_stats(const Eigen::MatrixXd &norms) {
  if (norms.cols() < 2 || norms.rows() < 1) {
    throw std::invalid_argument("consistency_stats: need >= 2 sensors and >= 1 step");
  }
  ConsistencyStats s;
  for (Eigen::Index k = 0; k < norms.rows(); ++k) {
    const Eigen::RowVectorXd row = norms.row(k);
    s.range.push_back(row.maxCoeff() - row.minCoeff());
    const double mean = row.mean();
    s.std.push_back(std::sqrt((row.array() - mean).square().mean()));
  }
  s.median_range = median(s.range);
  return s;
}

void write_traj_errors_csv(const std::vector<std::pair<std::string, TrajError>> &errors,
                           double rate, const std::string &path) {
  CsvWriter w(path, {"k", "t", "mode", "pos_err", "rot_err_deg"});
  for (const auto &[mode, e] : errors) {
    for (size_t k = 0; k < e.position.size(); ++k) {
      w << static_cast<long long>(k) << static_cast<double>(k) / rate << mode << e.position[k]
        << e.rotation_deg[k];
      w.end_row();
    }
  }
}

} // namespace magslam
