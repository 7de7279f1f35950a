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

#include "magslam/array.hpp"

#include <cmath>
#include <stdexcept>

#include "magslam/csv.hpp"

namespace magslam {

void ArrayLayout::validate() const {
  if (sensor_positions.empty()) {
    throw std::invalid_argument("array layout needs at least one sensor");
  }
  for (const auto &s : sensor_positions) {
    if (!s.allFinite()) {
      throw std::invalid_argument("array layout has a non-finite sensor position");
    }
  }
}

ArrayLayout ArrayLayout::single(int index) const {
  if (index < 0 || index >= n_mag()) {
    throw std::out_of_range("sensor index out of range");
  }
  return ArrayLayout{{sensor_positions[index]}};
}

ArrayLayout default_layout_30() {
  constexpr int kCols = 6;
  constexpr int kRows = 5;
  constexpr double kWidth = 0.345;
  constexpr double kHeight = 0.245;
  ArrayLayout layout;
  for (int r = 0; r < kRows; ++r) {
    for (int c = 0; c < kCols; ++c) {
      const double x = -0.5 * kWidth + kWidth * c / (kCols - 1);
      const double y = -0.5 * kHeight + kHeight * r / (kRows - 1);
      layout.sensor_positions.emplace_back(x, y, 0.0);
    }
  }
  return layout;
}

ArrayLayout load_layout_csv(const std::string &path) {
  const CsvTable t = read_csv(path);
  t.require_columns({"sensor_id", "sx", "sy", "sz"});
  ArrayLayout layout;
  for (size_t r = 0; r < t.n_rows(); ++r) {
    if (static_cast<size_t>(t.num(r, 0)) != r) {
      throw DataError(path + ": sensor_id must be 0..n-1 in order");
    }
    layout.sensor_positions.emplace_back(t.num(r, 1), t.num(r, 2), t.num(r, 3));
  }
  layout.validate();
  return layout;
}

void write_layout_csv(const ArrayLayout &layout, const std::string &path) {
  CsvWriter w(path, {"sensor_id", "sx", "sy", "sz"});
  for (int i = 0; i < layout.n_mag(); ++i) {
    const Vec3 &s = layout.sensor_positions[i];
    w << i << s.x() << s.y() << s.z();
    w.end_row();
  }
}

Calibration Calibration::identity(int n_mag) {
  return Calibration{std::vector<Vec3>(n_mag, Vec3::Ones()),
                     std::vector<Vec3>(n_mag, Vec3::Zero())};
}

void Calibration::validate() const {
  if (scale.size() != bias.size()) {
    throw std::invalid_argument("calibration scale/bias size mismatch");
  }
  for (const auto &d : scale) {
    if (!(d.array() > 0.0).all() || !d.allFinite()) {
      throw std::invalid_argument("calibration scale must be strictly positive");
    }
  }
}

Calibration Calibration::single(int index) const {
  return Calibration{{scale.at(index)}, {bias.at(index)}};
}

ArrayMeasurement measure_forward(const FieldFn &field, const Pose &pose,
                                 const ArrayLayout &layout,
                                 const Calibration &calib, double sigma_y,
                                 Rng &rng, int k) {
  calib.validate();
  if (calib.n_mag() != layout.n_mag()) {
    throw std::invalid_argument("calibration and layout sensor counts differ");
  }
  std::normal_distribution<double> noise(0.0, 1.0);
  const Mat3 rot_nb = pose.rot_bn.transpose();
  ArrayMeasurement out;
  out.k = k;
  out.y.resize(3 * layout.n_mag());
  for (int i = 0; i < layout.n_mag(); ++i) {
    const Vec3 q = pose.position + rot_nb * layout.sensor_positions[i];
    const Vec3 f = field(q);
    if (!f.allFinite()) {
      throw std::runtime_error("measure_forward: non-finite field value");
    }
    Vec3 yi = (pose.rot_bn * f + calib.bias[i]).cwiseQuotient(calib.scale[i]);
    for (int a = 0; a < 3; ++a) {
      yi[a] += sigma_y * noise(rng);
    }
    out.y.segment<3>(3 * i) = yi;
  }
  return out;
}

CorrectedMeasurement correct_measurement(const ArrayMeasurement &y,
                                         const std::vector<Vec3> &scale_est,
                                         double sigma_y) {
  if (static_cast<int>(scale_est.size()) != y.n_mag()) {
    throw std::invalid_argument("correct_measurement: sensor count mismatch");
  }
  CorrectedMeasurement out;
  out.z_input.resize(y.y.size());
  out.cov_diag.resize(y.y.size());
  for (int i = 0; i < y.n_mag(); ++i) {
    const Vec3 &d = scale_est[i];
    if (!(d.array() > 0.0).all()) {
      throw std::invalid_argument("correct_measurement: scale estimates must be positive");
    }
    out.z_input.segment<3>(3 * i) = d.cwiseProduct(y.sensor(i));
    out.cov_diag.segment<3>(3 * i) = sigma_y * sigma_y * d.cwiseAbs2();
  }
  return out;
}

Eigen::VectorXd apply_calibration(const Eigen::VectorXd &y, const Calibration &calib) {
  Eigen::VectorXd out(y.size());
  for (int i = 0; i < calib.n_mag(); ++i) {
    out.segment<3>(3 * i) = calib.scale[i].cwiseProduct(y.segment<3>(3 * i)) - calib.bias[i];
  }
  return out;
}

} // namespace magslam
