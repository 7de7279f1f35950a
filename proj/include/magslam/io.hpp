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

#ifndef MAGSLAM_IO_HPP_
#define MAGSLAM_IO_HPP_

#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "magslam/array.hpp"
#include "magslam/csv.hpp"
#include "magslam/dataset.hpp"
#include "magslam/fieldmap.hpp"
#include "magslam/filter.hpp"

namespace magslam {

// Dataset directory: metadata.json, layout.csv, odometry.csv,
// measurements.csv, groundtruth.csv (optional), calibration_true.csv
// (optional). Units are metres, microtesla and radians.
void write_dataset(const Dataset &ds, const std::string &dir);
Dataset read_dataset(const std::string &dir);

void write_calibration_csv(const Calibration &calib, const std::string &path);
Calibration read_calibration_csv(const std::string &path);

/// One trajectory row per pose. Quaternion and Euler angles describe R^bn.
struct TrajectoryRow {
  Pose pose;
  int iterations = 0;
  bool diverged = false;
  int outside = 0;
};

void write_trajectory_csv(const std::vector<TrajectoryRow> &rows, double rate,
                          const std::string &path);
std::vector<TrajectoryRow> trajectory_rows(const RunResult &result);
std::vector<TrajectoryRow> trajectory_rows(const std::vector<Pose> &poses);
std::vector<Pose> read_trajectory_csv(const std::string &path);

/// Rows k, sensor_id, dx, dy, dz, bx, by, bz.
void write_calibration_history_csv(const std::vector<Calibration> &history,
                                   const std::string &path);
std::vector<Calibration> read_calibration_history_csv(const std::string &path);

/// Final map: the basis (basis.json), weights and marginal variances
/// (map_weights.csv), and the full map block of the inverse information
/// (map_cov.bin: int64 n followed by n*n little-endian doubles, row-major).
struct MapExport {
  DomainBox domain;
  std::vector<Mode> modes;
  GpHyper hyper;
  Eigen::VectorXd weights;
  Eigen::MatrixXd cov;

  BasisSet basis() const { return BasisSet(domain, modes); }
};

/// Map block of the inverse of an information matrix.
Eigen::MatrixXd map_covariance(const Eigen::MatrixXd &info, int n_weights);

void write_map(const MapExport &map, const std::string &dir);
MapExport read_map(const std::string &dir);

/// Regular xy grid over the map domain at height z: x, y, z, mean_x,
/// mean_y, mean_z, norm, std_norm. std_norm is the first-order standard
/// deviation of the field norm, sqrt(mu^T Sigma mu) / |mu|.
void write_map_grid_csv(const MapExport &map, double z, double spacing,
                        const std::string &path);

nlohmann::json read_json(const std::string &path);
void write_json(const nlohmann::json &doc, const std::string &path);

} // namespace magslam

#endif // MAGSLAM_IO_HPP_
