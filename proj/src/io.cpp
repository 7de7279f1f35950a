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

#include "magslam/io.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>

#include <Eigen/Cholesky>
#include <Eigen/Geometry>

namespace magslam {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char *kDatasetFormat = "magslam-dataset";
constexpr int kDatasetVersion = 1;

std::string join(const std::string &dir, const std::string &name) {
  return (fs::path(dir) / name).string();
}

void ensure_dir(const std::string &dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw DataError(dir + ": cannot create directory (" + ec.message() + ")");
  }
}

std::vector<std::string> rot_header(const std::string &prefix) {
  std::vector<std::string> h;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      h.push_back(prefix + std::to_string(r) + std::to_string(c));
    }
  }
  return h;
}

void write_rot(CsvWriter &w, const Mat3 &r) {
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      w << r(i, j);
    }
  }
}

Mat3 read_rot(const CsvTable &t, size_t row, int first_col) {
  Mat3 r;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      r(i, j) = t.num(row, first_col + 3 * i + j);
    }
  }
  return r;
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string> &b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

void check_rows(const CsvTable &t, size_t expected, const std::string &path) {
  if (t.n_rows() != expected) {
    throw DataError(path + ": expected " + std::to_string(expected) + " rows, found " +
                    std::to_string(t.n_rows()));
  }
}

} // namespace

json read_json(const std::string &path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError(path + ": cannot open");
  }
  try {
    return json::parse(in);
  } catch (const json::parse_error &e) {
    throw DataError(path + ": " + e.what());
  }
}

void write_json(const json &doc, const std::string &path) {
  std::ofstream out(path);
  if (!out) {
    throw DataError(path + ": cannot write");
  }
  out << doc.dump(2) << '\n';
}

void write_calibration_csv(const Calibration &calib, const std::string &path) {
  CsvWriter w(path, {"sensor_id", "dx", "dy", "dz", "bx", "by", "bz"});
  for (int i = 0; i < calib.n_mag(); ++i) {
    w << i << calib.scale[i].x() << calib.scale[i].y() << calib.scale[i].z()
      << calib.bias[i].x() << calib.bias[i].y() << calib.bias[i].z();
    w.end_row();
  }
}

Calibration read_calibration_csv(const std::string &path) {
  const CsvTable t = read_csv(path);
  t.require_columns({"sensor_id", "dx", "dy", "dz", "bx", "by", "bz"});
  Calibration c;
  for (size_t r = 0; r < t.n_rows(); ++r) {
    if (static_cast<size_t>(t.num(r, 0)) != r) {
      throw DataError(path + ": sensor_id must be 0..n-1 in order");
    }
    c.scale.emplace_back(t.num(r, 1), t.num(r, 2), t.num(r, 3));
    c.bias.emplace_back(t.num(r, 4), t.num(r, 5), t.num(r, 6));
  }
  try {
    c.validate();
  } catch (const std::invalid_argument &e) {
    throw DataError(path + ": " + e.what());
  }
  return c;
}

void write_dataset(const Dataset &ds, const std::string &dir) {
  ds.validate();
  ensure_dir(dir);
  json meta;
  meta["format"] = kDatasetFormat;
  meta["version"] = kDatasetVersion;
  meta["rate"] = ds.rate;
  meta["n_steps"] = ds.n_steps();
  meta["n_mag"] = ds.layout.n_mag();
  meta["layout"] = "layout.csv";
  meta["has_ground_truth"] = ds.has_ground_truth();
  meta["has_calibration"] = ds.calib_true.has_value();
  meta["units"] = {{"position", "m"}, {"field", "uT"}, {"angle", "rad"}};
  meta["info"] = ds.metadata;
  write_json(meta, join(dir, "metadata.json"));
  write_layout_csv(ds.layout, join(dir, "layout.csv"));

  {
    CsvWriter w(join(dir, "odometry.csv"), concat({"k", "dpx", "dpy", "dpz"}, rot_header("dr")));
    for (int k = 0; k < ds.n_steps(); ++k) {
      w << k << ds.odom_dp[k].x() << ds.odom_dp[k].y() << ds.odom_dp[k].z();
      write_rot(w, ds.odom_drot[k]);
      w.end_row();
    }
  }
  {
    CsvWriter w(join(dir, "measurements.csv"), {"k", "sensor_id", "yx", "yy", "yz"});
    for (const auto &m : ds.measurements) {
      for (int i = 0; i < m.n_mag(); ++i) {
        const Vec3 y = m.sensor(i);
        w << m.k << i << y.x() << y.y() << y.z();
        w.end_row();
      }
    }
  }
  if (ds.has_ground_truth()) {
    CsvWriter w(join(dir, "groundtruth.csv"), concat({"k", "px", "py", "pz"}, rot_header("r")));
    for (size_t k = 0; k < ds.ground_truth.size(); ++k) {
      const Pose &p = ds.ground_truth[k];
      w << static_cast<long long>(k) << p.position.x() << p.position.y() << p.position.z();
      write_rot(w, p.rot_bn);
      w.end_row();
    }
  }
  if (ds.calib_true) {
    write_calibration_csv(*ds.calib_true, join(dir, "calibration_true.csv"));
  }
}

Dataset read_dataset(const std::string &dir) {
  const json meta = read_json(join(dir, "metadata.json"));
  if (meta.value("format", "") != kDatasetFormat) {
    throw DataError(dir + ": metadata.json is not a dataset description");
  }
  if (meta.value("version", 0) != kDatasetVersion) {
    throw DataError(dir + ": unsupported dataset version");
  }
  Dataset ds;
  try {
    ds.rate = meta.at("rate").get<double>();
    ds.metadata = meta.value("info", json::object());
    ds.layout = load_layout_csv(join(dir, meta.value("layout", std::string("layout.csv"))));
  } catch (const json::exception &e) {
    throw DataError(dir + "/metadata.json: " + e.what());
  }
  const int n_mag = ds.layout.n_mag();

  const std::string odo_path = join(dir, "odometry.csv");
  const CsvTable odo = read_csv(odo_path);
  odo.require_columns(concat({"k", "dpx", "dpy", "dpz"}, rot_header("dr")));
  for (size_t r = 0; r < odo.n_rows(); ++r) {
    if (static_cast<size_t>(odo.num(r, 0)) != r) {
      throw DataError(odo_path + ": k must run 0..N-1 in order");
    }
    ds.odom_dp.emplace_back(odo.num(r, 1), odo.num(r, 2), odo.num(r, 3));
    ds.odom_drot.push_back(read_rot(odo, r, 4));
  }
  const size_t n = odo.n_rows();

  const std::string meas_path = join(dir, "measurements.csv");
  const CsvTable meas = read_csv(meas_path);
  meas.require_columns({"k", "sensor_id", "yx", "yy", "yz"});
  check_rows(meas, n * n_mag, meas_path);
  ds.measurements.resize(n);
  for (size_t k = 0; k < n; ++k) {
    ArrayMeasurement &m = ds.measurements[k];
    m.k = static_cast<int>(k + 1);
    m.y.resize(3 * n_mag);
    for (int i = 0; i < n_mag; ++i) {
      const size_t r = k * n_mag + i;
      if (static_cast<size_t>(meas.num(r, 0)) != k + 1 || static_cast<int>(meas.num(r, 1)) != i) {
        throw DataError(meas_path + ": rows must be ordered by k = 1..N, then sensor_id");
      }
      m.y.segment<3>(3 * i) = Vec3(meas.num(r, 2), meas.num(r, 3), meas.num(r, 4));
    }
  }

  const std::string gt_path = join(dir, "groundtruth.csv");
  if (fs::exists(gt_path)) {
    const CsvTable gt = read_csv(gt_path);
    gt.require_columns(concat({"k", "px", "py", "pz"}, rot_header("r")));
    check_rows(gt, n + 1, gt_path);
    for (size_t r = 0; r < gt.n_rows(); ++r) {
      ds.ground_truth.push_back(
          Pose{Vec3(gt.num(r, 1), gt.num(r, 2), gt.num(r, 3)), read_rot(gt, r, 4)});
    }
  }
  const std::string cal_path = join(dir, "calibration_true.csv");
  if (fs::exists(cal_path)) {
    ds.calib_true = read_calibration_csv(cal_path);
  }
  try {
    ds.validate();
  } catch (const std::invalid_argument &e) {
    throw DataError(dir + ": " + e.what());
  }
  return ds;
}

std::vector<TrajectoryRow> trajectory_rows(const RunResult &result) {
  std::vector<TrajectoryRow> rows;
  for (const auto &s : result.steps) {
    rows.push_back({s.pose, s.iterations, s.diverged, s.outside});
  }
  return rows;
}

std::vector<TrajectoryRow> trajectory_rows(const std::vector<Pose> &poses) {
  std::vector<TrajectoryRow> rows;
  for (const auto &p : poses) {
    rows.push_back({p, 0, false, 0});
  }
  return rows;
}

void write_trajectory_csv(const std::vector<TrajectoryRow> &rows, double rate,
                          const std::string &path) {
  CsvWriter w(path, {"k", "t", "px", "py", "pz", "qw", "qx", "qy", "qz", "roll", "pitch",
                     "yaw", "iterations", "diverged", "outside"});
  for (size_t k = 0; k < rows.size(); ++k) {
    const Pose &p = rows[k].pose;
    Eigen::Quaterniond q(p.rot_bn);
    q.normalize();
    if (q.w() < 0.0) {
      q.coeffs() *= -1.0;
    }
    const Vec3 e = euler_from_rot_bn(p.rot_bn);
    w << static_cast<long long>(k) << static_cast<double>(k) / rate << p.position.x()
      << p.position.y() << p.position.z() << q.w() << q.x() << q.y() << q.z() << e.x() << e.y()
      << e.z() << rows[k].iterations << (rows[k].diverged ? 1 : 0) << rows[k].outside;
    w.end_row();
  }
}

std::vector<Pose> read_trajectory_csv(const std::string &path) {
  const CsvTable t = read_csv(path);
  t.require_columns({"k", "t", "px", "py", "pz", "qw", "qx", "qy", "qz"});
  std::vector<Pose> out;
  for (size_t r = 0; r < t.n_rows(); ++r) {
    Eigen::Quaterniond q(t.num(r, 5), t.num(r, 6), t.num(r, 7), t.num(r, 8));
    out.push_back(Pose{Vec3(t.num(r, 2), t.num(r, 3), t.num(r, 4)),
                       q.normalized().toRotationMatrix()});
  }
  return out;
}

void write_calibration_history_csv(const std::vector<Calibration> &history,
                                   const std::string &path) {
  CsvWriter w(path, {"k", "sensor_id", "dx", "dy", "dz", "bx", "by", "bz"});
  for (size_t k = 0; k < history.size(); ++k) {
    const Calibration &c = history[k];
    for (int i = 0; i < c.n_mag(); ++i) {
      w << static_cast<long long>(k) << i << c.scale[i].x() << c.scale[i].y()
        << c.scale[i].z() << c.bias[i].x() << c.bias[i].y() << c.bias[i].z();
      w.end_row();
    }
  }
}

std::vector<Calibration> read_calibration_history_csv(const std::string &path) {
  const CsvTable t = read_csv(path);
  t.require_columns({"k", "sensor_id", "dx", "dy", "dz", "bx", "by", "bz"});
  std::vector<Calibration> out;
  for (size_t r = 0; r < t.n_rows(); ++r) {
    const size_t k = static_cast<size_t>(t.num(r, 0));
    const int i = static_cast<int>(t.num(r, 1));
    if (k == out.size()) {
      out.emplace_back();
    }
    if (k + 1 != out.size() || i != out.back().n_mag()) {
      throw DataError(path + ": rows must be ordered by k, then sensor_id");
    }
    out.back().scale.emplace_back(t.num(r, 2), t.num(r, 3), t.num(r, 4));
    out.back().bias.emplace_back(t.num(r, 5), t.num(r, 6), t.num(r, 7));
  }
  return out;
}

Eigen::MatrixXd map_covariance(const Eigen::MatrixXd &info, int n_weights) {
  const Eigen::Index n = info.rows();
  Eigen::LLT<Eigen::MatrixXd> llt(info);
  if (llt.info() != Eigen::Success) {
    throw DivergenceError("information matrix is not positive definite");
  }
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, n_weights);
  rhs.middleRows(StateLayout::kMap, n_weights).setIdentity();
  const Eigen::MatrixXd cols = llt.solve(rhs);
  Eigen::MatrixXd cov = cols.middleRows(StateLayout::kMap, n_weights);
  return 0.5 * (cov + cov.transpose());
}

void write_map(const MapExport &map, const std::string &dir) {
  ensure_dir(dir);
  const int nw = static_cast<int>(map.weights.size());
  if (nw != BasisSet::kLinearSlots + static_cast<int>(map.modes.size()) || map.cov.rows() != nw ||
      map.cov.cols() != nw) {
    throw std::invalid_argument("write_map: inconsistent map sizes");
  }
  json basis;
  basis["domain"] = {{"lower", {map.domain.lower.x(), map.domain.lower.y(), map.domain.lower.z()}},
                     {"upper", {map.domain.upper.x(), map.domain.upper.y(), map.domain.upper.z()}}};
  basis["hyper"] = {{"length_scale", map.hyper.length_scale},
                    {"sigma_se", map.hyper.sigma_se},
                    {"sigma_lin", map.hyper.sigma_lin},
                    {"sigma_y", map.hyper.sigma_y}};
  json modes = json::array();
  for (const auto &m : map.modes) {
    modes.push_back({m.index[0], m.index[1], m.index[2]});
  }
  basis["modes"] = modes;
  write_json(basis, join(dir, "basis.json"));

  CsvWriter w(join(dir, "map_weights.csv"),
              {"index", "jx", "jy", "jz", "eigenvalue", "weight", "var"});
  for (int j = 0; j < nw; ++j) {
    std::array<int, 3> idx{0, 0, 0};
    double lambda = 0.0;
    if (j >= BasisSet::kLinearSlots) {
      idx = map.modes[j - BasisSet::kLinearSlots].index;
      lambda = map.modes[j - BasisSet::kLinearSlots].eigenvalue;
    }
    w << j << idx[0] << idx[1] << idx[2] << lambda << map.weights[j] << map.cov(j, j);
    w.end_row();
  }

  std::ofstream bin(join(dir, "map_cov.bin"), std::ios::binary);
  if (!bin) {
    throw DataError(dir + ": cannot write map_cov.bin");
  }
  const std::int64_t n = nw;
  bin.write(reinterpret_cast<const char *>(&n), sizeof(n));
  for (int r = 0; r < nw; ++r) {
    for (int c = 0; c < nw; ++c) {
      const double v = map.cov(r, c);
      bin.write(reinterpret_cast<const char *>(&v), sizeof(v));
    }
  }
}

MapExport read_map(const std::string &dir) {
  const json basis = read_json(join(dir, "basis.json"));
  MapExport map;
  try {
    for (int d = 0; d < 3; ++d) {
      map.domain.lower[d] = basis.at("domain").at("lower").at(d).get<double>();
      map.domain.upper[d] = basis.at("domain").at("upper").at(d).get<double>();
    }
    const json &h = basis.at("hyper");
    map.hyper.length_scale = h.at("length_scale").get<double>();
    map.hyper.sigma_se = h.at("sigma_se").get<double>();
    map.hyper.sigma_lin = h.at("sigma_lin").get<double>();
    map.hyper.sigma_y = h.at("sigma_y").get<double>();
    const Vec3 ext = map.domain.extent();
    for (const auto &m : basis.at("modes")) {
      Mode mode;
      double lambda = 0.0;
      for (int d = 0; d < 3; ++d) {
        mode.index[d] = m.at(d).get<int>();
        const double w = kPi * mode.index[d] / ext[d];
        lambda += w * w;
      }
      mode.eigenvalue = lambda;
      map.modes.push_back(mode);
    }
  } catch (const json::exception &e) {
    throw DataError(dir + "/basis.json: " + e.what());
  }
  const int nw = BasisSet::kLinearSlots + static_cast<int>(map.modes.size());

  const std::string wpath = join(dir, "map_weights.csv");
  const CsvTable t = read_csv(wpath);
  t.require_columns({"index", "jx", "jy", "jz", "eigenvalue", "weight", "var"});
  check_rows(t, nw, wpath);
  map.weights.resize(nw);
  for (int j = 0; j < nw; ++j) {
    map.weights[j] = t.num(j, 5);
  }

  std::ifstream bin(join(dir, "map_cov.bin"), std::ios::binary);
  if (!bin) {
    throw DataError(dir + ": cannot open map_cov.bin");
  }
  std::int64_t n = 0;
  bin.read(reinterpret_cast<char *>(&n), sizeof(n));
  if (!bin || n != nw) {
    throw DataError(dir + "/map_cov.bin: size does not match the basis");
  }
  map.cov.resize(nw, nw);
  for (int r = 0; r < nw; ++r) {
    for (int c = 0; c < nw; ++c) {
      double v = 0.0;
      bin.read(reinterpret_cast<char *>(&v), sizeof(v));
      map.cov(r, c) = v;
    }
  }
  if (!bin) {
    throw DataError(dir + "/map_cov.bin: truncated");
  }
  return map;
}

void write_map_grid_csv(const MapExport &map, double z, double spacing, const std::string &path) {
  if (!(spacing > 0.0)) {
    throw std::invalid_argument("map grid spacing must be positive");
  }
  const BasisSet basis = map.basis();
  const Vec3 lo = map.domain.lower;
  const Vec3 ext = map.domain.extent();
  const int nx = static_cast<int>(std::floor(ext.x() / spacing + 1e-9)) + 1;
  const int ny = static_cast<int>(std::floor(ext.y() / spacing + 1e-9)) + 1;
  CsvWriter w(path, {"x", "y", "z", "mean_x", "mean_y", "mean_z", "norm", "std_norm"});
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      const Vec3 p(lo.x() + ix * spacing, lo.y() + iy * spacing, z);
      const FieldPrediction f = predict_field(basis, map.weights, map.cov, p);
      const double norm = f.mean.norm();
      const double var = norm > 0.0 ? f.mean.dot(f.var * f.mean) / (norm * norm) : f.var.trace();
      w << p.x() << p.y() << p.z() << f.mean.x() << f.mean.y() << f.mean.z() << norm
        << std::sqrt(std::max(var, 0.0));
      w.end_row();
    }
  }
}

} // namespace magslam
