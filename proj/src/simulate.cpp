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

#include "magslam/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace magslam {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(master) ^ stream) ^ index);
}

Mat3 curl_free_kernel(const Vec3 &r, double sigma, double length_scale) {
  const double l2 = length_scale * length_scale;
  const double e = std::exp(-0.5 * r.squaredNorm() / l2);
  return (sigma * sigma / l2) * e * (Mat3::Identity() - r * r.transpose() / l2);
}

// ---------------------------------------------------------------------------
// FieldOracle

FieldOracle::FieldOracle(Vec3 earth_field)
    : method_(FieldMethod::Dense), earth_(std::move(earth_field)) {}

FieldOracle::FieldOracle(Vec3 earth_field, std::vector<Vec3> anchors,
                         Eigen::VectorXd alpha, double sigma_cf, double length_scale,
                         Eigen::VectorXd anchor_values)
    : method_(FieldMethod::Dense),
      earth_(std::move(earth_field)),
      anchors_(std::move(anchors)),
      alpha_(std::move(alpha)),
      anchor_values_(std::move(anchor_values)),
      sigma_(sigma_cf),
      length_(length_scale) {
  if (alpha_.size() != 3 * static_cast<Eigen::Index>(anchors_.size())) {
    throw std::invalid_argument("FieldOracle: alpha must hold 3 values per anchor");
  }
  if (anchor_values_.size() == alpha_.size()) {
    return;
  }
  anchor_values_.resize(alpha_.size());
  for (size_t a = 0; a < anchors_.size(); ++a) {
    anchor_values_.segment<3>(3 * a) = (*this)(anchors_[a]) - earth_;
  }
}

FieldOracle::FieldOracle(Vec3 earth_field, std::shared_ptr<const BasisSet> basis,
                         Eigen::VectorXd weights)
    : method_(FieldMethod::ReducedRank),
      earth_(std::move(earth_field)),
      basis_(std::move(basis)),
      weights_(std::move(weights)) {
  if (!basis_ || weights_.size() != basis_->n_weights()) {
    throw std::invalid_argument("FieldOracle: weights do not match the basis");
  }
}

Vec3 FieldOracle::operator()(const Vec3 &p) const {
  if (basis_) {
    return earth_ + basis_->field(p, weights_);
  }
  Vec3 f = earth_;
  if (anchors_.empty() || sigma_ == 0.0) {
    return f;
  }
  const double l2 = length_ * length_;
  const double c = sigma_ * sigma_ / l2;
  for (size_t a = 0; a < anchors_.size(); ++a) {
    const Vec3 r = p - anchors_[a];
    const double d2 = r.squaredNorm();
    if (d2 > 64.0 * l2) {
      continue; // exp(-32) relative contribution
    }
    const Vec3 al = alpha_.segment<3>(3 * a);
    const double e = c * std::exp(-0.5 * d2 / l2);
    f += e * (al - r * (r.dot(al) / l2));
  }
  return f;
}

Mat3 FieldOracle::jacobian(const Vec3 &p) const {
  Mat3 jac = Mat3::Zero();
  if (basis_) {
    Matrix3X grad;
    basis_->evaluate(p, weights_, grad, jac);
    return jac;
  }
  if (anchors_.empty() || sigma_ == 0.0) {
    return jac;
  }
  const double l2 = length_ * length_;
  const double c = sigma_ * sigma_ / l2;
  for (size_t a = 0; a < anchors_.size(); ++a) {
    const Vec3 r = p - anchors_[a];
    const double d2 = r.squaredNorm();
    if (d2 > 64.0 * l2) {
      continue;
    }
    const Vec3 al = alpha_.segment<3>(3 * a);
    const double e = c * std::exp(-0.5 * d2 / l2);
    const double ra = r.dot(al);
    const Vec3 g = al - r * (ra / l2);
    // d/dr of e * g(r)
    jac += e * (-(g * r.transpose()) / l2 -
                (ra * Mat3::Identity() + r * al.transpose()) / l2);
  }
  return jac;
}

FieldFn FieldOracle::as_function() const {
  auto self = std::make_shared<FieldOracle>(*this);
  return [self](const Vec3 &p) { return (*self)(p); };
}

namespace {

void check_region(const DomainBox &region) {
  if (!region.lower.allFinite() || !region.upper.allFinite() ||
      !(region.upper.array() >= region.lower.array()).all()) {
    throw std::invalid_argument("field region must have finite, ordered bounds");
  }
}

} // namespace

std::vector<Vec3> sensor_track(const std::vector<Pose> &truth, const ArrayLayout &layout) {
  std::vector<Vec3> out;
  out.reserve(truth.size() * layout.sensor_positions.size());
  for (const auto &pose : truth) {
    const Mat3 rot_nb = pose.rot_bn.transpose();
    for (const auto &s : layout.sensor_positions) {
      out.push_back(pose.position + rot_nb * s);
    }
  }
  return out;
}

DomainBox track_region(const std::vector<Pose> &truth, const ArrayLayout &layout) {
  const auto pts = sensor_track(truth, layout);
  if (pts.empty()) {
    throw std::invalid_argument("track_region: empty trajectory");
  }
  DomainBox box{pts.front(), pts.front()};
  for (const auto &p : pts) {
    box.lower = box.lower.cwiseMin(p);
    box.upper = box.upper.cwiseMax(p);
  }
  return box;
}

std::vector<Vec3> anchor_lattice(const FieldSpec &spec) {
  check_region(spec.region);
  const double l = spec.length_scale;
  const double spacing = spec.anchor_spacing * l;
  const Vec3 lo = spec.region.lower - Vec3::Constant(spec.anchor_margin * l);
  const Vec3 ext = spec.region.extent() + Vec3::Constant(2.0 * spec.anchor_margin * l);
  std::array<int, 3> n{};
  Vec3 start;
  for (int d = 0; d < 3; ++d) {
    n[d] = static_cast<int>(std::floor(ext[d] / spacing + 1e-9)) + 1;
    start[d] = lo[d] + 0.5 * (ext[d] - (n[d] - 1) * spacing);
  }
  std::vector<Vec3> out;
  out.reserve(static_cast<size_t>(n[0]) * n[1] * n[2]);
  for (int i = 0; i < n[0]; ++i) {
    for (int j = 0; j < n[1]; ++j) {
      for (int k = 0; k < n[2]; ++k) {
        out.emplace_back(start[0] + i * spacing, start[1] + j * spacing,
                         start[2] + k * spacing);
      }
    }
  }
  return out;
}

FieldOracle sample_dense_field(const std::vector<Vec3> &anchors, double sigma_cf,
                               double length_scale, const Vec3 &earth_field,
                               std::uint64_t seed, double jitter) {
  if (!(length_scale > 0.0) || sigma_cf < 0.0) {
    throw std::invalid_argument("sample_dense_field: need length_scale > 0, sigma_cf >= 0");
  }
  if (sigma_cf == 0.0 || anchors.empty()) {
    return FieldOracle(earth_field);
  }
  const Eigen::Index n = 3 * static_cast<Eigen::Index>(anchors.size());
  Eigen::MatrixXd k(n, n);
  for (size_t a = 0; a < anchors.size(); ++a) {
    for (size_t b = 0; b <= a; ++b) {
      const Mat3 kab = curl_free_kernel(anchors[a] - anchors[b], sigma_cf, length_scale);
      k.block<3, 3>(3 * a, 3 * b) = kab;
      k.block<3, 3>(3 * b, 3 * a) = kab.transpose();
    }
  }
  const double diag = sigma_cf * sigma_cf / (length_scale * length_scale);
  k.diagonal().array() += jitter * diag;
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("sample_dense_field: anchor covariance not PSD after jitter");
  }
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd xi(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    xi[i] = normal(rng);
  }
  // values v = L xi, weights alpha = K^-1 v = L^-T xi
  Eigen::VectorXd values = llt.matrixL() * xi;
  Eigen::VectorXd alpha = llt.matrixU().solve(xi);
  return FieldOracle(earth_field, anchors, std::move(alpha), sigma_cf, length_scale,
                     std::move(values));
}

FieldOracle sample_field(const FieldSpec &spec) {
  if (!(spec.length_scale > 0.0) || spec.sigma_cf < 0.0) {
    throw std::invalid_argument("sample_field: need length_scale > 0, sigma_cf >= 0");
  }
  check_region(spec.region);
  if (spec.method == FieldMethod::Dense) {
    return sample_dense_field(anchor_lattice(spec), spec.sigma_cf, spec.length_scale,
                              spec.earth_field, spec.seed, spec.jitter);
  }
  const double m = spec.rr_margin * spec.length_scale;
  DomainBox dom{spec.region.lower - Vec3::Constant(m), spec.region.upper + Vec3::Constant(m)};
  GpHyper hyper;
  hyper.length_scale = spec.length_scale;
  hyper.sigma_se = std::max(spec.sigma_cf, 1e-300);
  auto basis = std::make_shared<const BasisSet>(build_basis(dom, spec.n_modes, hyper));
  Eigen::VectorXd w = Eigen::VectorXd::Zero(basis->n_weights());
  if (spec.sigma_cf > 0.0) {
    const Eigen::VectorXd cov = prior_weight_cov(*basis, hyper);
    Rng rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int j = BasisSet::kLinearSlots; j < basis->n_weights(); ++j) {
      w[j] = std::sqrt(cov[j]) * normal(rng);
    }
  }
  return FieldOracle(spec.earth_field, std::move(basis), std::move(w));
}

// ---------------------------------------------------------------------------
// Motions

namespace {

struct NamedMotion {
  MotionKind kind;
  const char *name;
};

constexpr NamedMotion kMotionNames[] = {
    {MotionKind::FullRotationInPlace, "full_rotation_in_place"},
    {MotionKind::WigglingInPlace, "wiggling_in_place"},
    {MotionKind::YawRotationInPlace, "yaw_rotation_in_place"},
    {MotionKind::CircleNoRotation, "circle_no_rotation"},
    {MotionKind::CircleYawRotation, "circle_yaw_rotation"},
    {MotionKind::CircleWiggle, "circle_wiggle"},
    {MotionKind::SquareLoop, "square_loop"},
    {MotionKind::Snake, "snake"},
    {MotionKind::InfinityLoop, "infinity_loop"},
};

double wrap_angle(double a) {
  return std::atan2(std::sin(a), std::cos(a));
}

// One straight segment or one in-place turn of a polyline path.
struct Phase {
  Vec3 start;
  Vec3 end;
  double yaw0 = 0.0;
  double yaw1 = 0.0;
  double duration = 0.0;
};

std::vector<Pose> sample_phases(const std::vector<Phase> &phases, double rate) {
  double total = 0.0;
  for (const auto &ph : phases) {
    total += ph.duration;
  }
  const int n = static_cast<int>(std::llround(total * rate));
  std::vector<Pose> out;
  out.reserve(n + 1);
  size_t idx = 0;
  double t0 = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double t = std::min(k / rate, total);
    while (idx + 1 < phases.size() && t > t0 + phases[idx].duration) {
      t0 += phases[idx].duration;
      ++idx;
    }
    const Phase &ph = phases[idx];
    const double s = ph.duration > 0.0 ? std::clamp((t - t0) / ph.duration, 0.0, 1.0) : 1.0;
    Pose pose;
    pose.position = ph.start + s * (ph.end - ph.start);
    pose.rot_bn = rot_bn_from_euler(0.0, 0.0, ph.yaw0 + s * (ph.yaw1 - ph.yaw0));
    out.push_back(pose);
  }
  return out;
}

std::vector<Pose> polyline_motion(const std::vector<Vec3> &waypoints, const MotionSpec &spec) {
  std::vector<Phase> phases;
  double yaw = 0.0;
  const double turn_rate = spec.turn_rate_deg * kDegToRad;
  for (size_t i = 0; i + 1 < waypoints.size(); ++i) {
    const Vec3 seg = waypoints[i + 1] - waypoints[i];
    const double len = seg.norm();
    if (len <= 0.0) {
      continue;
    }
    if (spec.turn_at_corners) {
      const double heading = std::atan2(seg.y(), seg.x());
      const double dyaw = wrap_angle(heading - yaw);
      if (std::abs(dyaw) > 1e-12) {
        phases.push_back({waypoints[i], waypoints[i], yaw, yaw + dyaw,
                          std::abs(dyaw) / turn_rate});
        yaw += dyaw;
      }
    }
    phases.push_back({waypoints[i], waypoints[i + 1], yaw, yaw, len / spec.speed});
  }
  if (phases.empty()) {
    phases.push_back({Vec3::Zero(), Vec3::Zero(), 0.0, 0.0, 0.0});
  }
  return sample_phases(phases, spec.rate);
}

} // namespace

std::string motion_name(MotionKind kind) {
  for (const auto &m : kMotionNames) {
    if (m.kind == kind) {
      return m.name;
    }
  }
  throw std::invalid_argument("unknown motion kind");
}

MotionKind parse_motion(const std::string &name) {
  for (const auto &m : kMotionNames) {
    if (name == m.name) {
      return m.kind;
    }
  }
  throw std::invalid_argument("unknown motion '" + name + "'");
}

std::vector<MotionKind> paper_motions() {
  return {MotionKind::FullRotationInPlace, MotionKind::WigglingInPlace,
          MotionKind::YawRotationInPlace,  MotionKind::CircleNoRotation,
          MotionKind::CircleYawRotation,   MotionKind::CircleWiggle};
}

void MotionSpec::validate() const {
  if (!(rate > 0.0)) {
    throw std::invalid_argument("motion rate must be positive");
  }
  if (!(duration >= 0.0)) {
    throw std::invalid_argument("motion duration must be non-negative");
  }
  if (!(radius >= 0.0)) {
    throw std::invalid_argument("motion radius must be non-negative");
  }
  if (!(laps > 0.0)) {
    throw std::invalid_argument("motion laps must be positive");
  }
  if (!(speed > 0.0) || !(turn_rate_deg > 0.0)) {
    throw std::invalid_argument("motion speed and turn rate must be positive");
  }
  if (!(side > 0.0) || rows < 1 || !(row_spacing >= 0.0)) {
    throw std::invalid_argument("invalid path dimensions");
  }
  if (!(max_rate_deg > 0.0)) {
    throw std::invalid_argument("max_rate_deg must be positive");
  }
}

std::vector<Pose> gen_motion(const MotionSpec &spec) {
  spec.validate();
  if (spec.kind == MotionKind::SquareLoop) {
    const double s = spec.side;
    const Vec3 corners[4] = {Vec3(0, 0, 0), Vec3(s, 0, 0), Vec3(s, s, 0), Vec3(0, s, 0)};
    const int n_sides = std::max(1, static_cast<int>(std::llround(4.0 * spec.laps)));
    std::vector<Vec3> wp{corners[0]};
    for (int i = 1; i <= n_sides; ++i) {
      wp.push_back(corners[i % 4]);
    }
    return polyline_motion(wp, spec);
  }
  if (spec.kind == MotionKind::Snake) {
    std::vector<Vec3> wp;
    for (int r = 0; r < spec.rows; ++r) {
      const double y = r * spec.row_spacing;
      const bool forward = r % 2 == 0;
      wp.emplace_back(forward ? 0.0 : spec.side, y, 0.0);
      wp.emplace_back(forward ? spec.side : 0.0, y, 0.0);
    }
    return polyline_motion(wp, spec);
  }

  const int n = static_cast<int>(std::llround(spec.duration * spec.rate));
  const double dt = 1.0 / spec.rate;
  const double amp = spec.wiggle_deg * kDegToRad;
  Rng rng(spec.seed);
  std::uniform_real_distribution<double> jitter(0.8, 1.2);
  // wiggle frequencies (Hz), perturbed by the seed
  const double f_roll = 0.20 * jitter(rng);
  const double f_pitch = 0.27 * jitter(rng);
  const double f_yaw = 0.33 * jitter(rng);
  const double two_pi = 2.0 * kPi;

  std::vector<Pose> out;
  out.reserve(n + 1);
  if (spec.kind == MotionKind::FullRotationInPlace) {
    std::normal_distribution<double> normal(0.0, 1.0);
    const double cap = spec.max_rate_deg * kDegToRad;
    Vec3 omega = Vec3::Zero();
    Mat3 r = Mat3::Identity();
    out.push_back({Vec3::Zero(), r});
    for (int k = 1; k <= n; ++k) {
      for (int a = 0; a < 3; ++a) {
        omega[a] += cap * std::sqrt(dt) * normal(rng);
      }
      if (omega.norm() > cap) {
        omega *= cap / omega.norm();
      }
      // body-frame angular velocity: R^nb <- R^nb exp(omega dt)
      r = orthonormalize(exp_rot(-omega * dt) * r);
      out.push_back({Vec3::Zero(), r});
    }
    return out;
  }

  const double total = std::max(spec.duration, dt);
  for (int k = 0; k <= n; ++k) {
    const double t = k * dt;
    Vec3 p = Vec3::Zero();
    double roll = 0.0, pitch = 0.0, yaw = 0.0;
    const double theta = two_pi * spec.laps * t / total;
    switch (spec.kind) {
    case MotionKind::WigglingInPlace:
      roll = amp * std::sin(two_pi * f_roll * t);
      pitch = amp * std::sin(two_pi * f_pitch * t);
      yaw = amp * std::sin(two_pi * f_yaw * t);
      break;
    case MotionKind::YawRotationInPlace:
      yaw = spec.yaw_amplitude_deg * kDegToRad * std::sin(two_pi * 0.1 * t);
      break;
    case MotionKind::CircleNoRotation:
      p = Vec3(spec.radius * std::sin(theta), spec.radius * (1.0 - std::cos(theta)), 0.0);
      break;
    case MotionKind::CircleYawRotation:
      p = Vec3(spec.radius * std::sin(theta), spec.radius * (1.0 - std::cos(theta)), 0.0);
      yaw = theta;
      break;
    case MotionKind::CircleWiggle:
      p = Vec3(spec.radius * std::sin(theta), spec.radius * (1.0 - std::cos(theta)), 0.0);
      roll = amp * std::sin(two_pi * f_roll * t);
      pitch = amp * std::sin(two_pi * f_pitch * t);
      break;
    case MotionKind::InfinityLoop: {
      // figure-eight through the origin, rotated so the initial tangent is +x
      const double a = 0.5 * spec.side;
      const Vec3 raw(a * std::sin(theta), 0.5 * a * std::sin(2.0 * theta), 0.0);
      const Mat3 rz = rot_bn_from_euler(0.0, 0.0, 0.25 * kPi);
      p = rz * raw;
      const Vec3 v = rz * Vec3(std::cos(theta), std::cos(2.0 * theta), 0.0);
      yaw = spec.turn_at_corners ? std::atan2(v.y(), v.x()) : 0.0;
      break;
    }
    default:
      break;
    }
    out.push_back({p, rot_bn_from_euler(roll, pitch, yaw)});
  }
  return out;
}

Calibration sample_calibration(int n_mag, std::uint64_t seed, const CalibrationRanges &ranges) {
  if (n_mag < 1) {
    throw std::invalid_argument("sample_calibration: n_mag must be >= 1");
  }
  Rng rng(seed);
  std::uniform_real_distribution<double> ud(ranges.scale_lo, ranges.scale_hi);
  std::uniform_real_distribution<double> ub(ranges.bias_lo, ranges.bias_hi);
  Calibration c;
  for (int i = 0; i < n_mag; ++i) {
    c.scale.emplace_back(ud(rng), ud(rng), ud(rng));
    c.bias.emplace_back(ub(rng), ub(rng), ub(rng));
  }
  return c;
}

void true_increments(const std::vector<Pose> &truth, std::vector<Vec3> &dp,
                     std::vector<Mat3> &drot) {
  dp.clear();
  drot.clear();
  for (size_t k = 0; k + 1 < truth.size(); ++k) {
    const Pose &a = truth[k];
    const Pose &b = truth[k + 1];
    dp.push_back(a.rot_bn * (b.position - a.position));
    drot.push_back(b.rot_bn * a.rot_bn.transpose());
  }
}

Dataset make_dataset(const FieldFn &field, const std::vector<Pose> &truth,
                     const ArrayLayout &layout, const Calibration &calib,
                     const SimNoise &noise, double rate, std::uint64_t seed) {
  if (truth.empty()) {
    throw std::invalid_argument("make_dataset: empty trajectory");
  }
  if (!(rate > 0.0)) {
    throw std::invalid_argument("make_dataset: rate must be positive");
  }
  layout.validate();
  calib.validate();
  if (calib.n_mag() != layout.n_mag()) {
    throw std::invalid_argument("make_dataset: calibration and layout sizes differ");
  }
  const double dt = 1.0 / rate;
  Dataset ds;
  ds.rate = rate;
  ds.layout = layout;
  ds.ground_truth = truth;
  ds.calib_true = calib;
  true_increments(truth, ds.odom_dp, ds.odom_drot);

  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Vec3 pos_std = noise.sigma_pos * dt;
  const Vec3 rot_std = noise.sigma_rot * dt;
  const Vec3 pos_off = noise.offset_pos * dt;
  const Mat3 rot_off = exp_rot(noise.offset_rot * dt);
  for (int k = 0; k < ds.n_steps(); ++k) {
    Vec3 ep, nu;
    for (int a = 0; a < 3; ++a) {
      ep[a] = pos_std[a] * normal(rng);
    }
    for (int a = 0; a < 3; ++a) {
      nu[a] = rot_std[a] * normal(rng);
    }
    ds.odom_dp[k] += ep + pos_off;
    ds.odom_drot[k] = orthonormalize(rot_off * exp_rot(nu) * ds.odom_drot[k]);
    ds.measurements.push_back(
        measure_forward(field, truth[k + 1], layout, calib, noise.sigma_y, rng, k + 1));
  }
  ds.metadata["rate"] = rate;
  ds.metadata["seed"] = seed;
  ds.metadata["sigma_y"] = noise.sigma_y;
  ds.metadata["sigma_pos"] = {noise.sigma_pos.x(), noise.sigma_pos.y(), noise.sigma_pos.z()};
  ds.metadata["sigma_rot"] = {noise.sigma_rot.x(), noise.sigma_rot.y(), noise.sigma_rot.z()};
  ds.metadata["o_pos"] = {noise.offset_pos.x(), noise.offset_pos.y(), noise.offset_pos.z()};
  ds.metadata["o_rot"] = {noise.offset_rot.x(), noise.offset_rot.y(), noise.offset_rot.z()};
  ds.metadata["units"] = {{"position", "m"}, {"field", "uT"}, {"angle", "rad"},
                          {"o_pos", "m/s"}, {"o_rot", "rad/s"}};
  return ds;
}

ConsistencySeries consistency_experiment(const std::vector<Calibration> &candidates,
                                         const Calibration &true_calib,
                                         const FieldOracle &field,
                                         const std::vector<Pose> &motion,
                                         double sigma_y, std::uint64_t seed) {
  true_calib.validate();
  const int m = true_calib.n_mag();
  for (const auto &c : candidates) {
    c.validate();
    if (c.n_mag() != m) {
      throw std::invalid_argument("consistency_experiment: candidate sensor count differs");
    }
  }
  const int k_steps = static_cast<int>(motion.size());
  ConsistencySeries out;
  out.reference.resize(k_steps);
  out.uncalibrated.resize(k_steps, m);
  out.corrected.assign(candidates.size(), Eigen::MatrixXd(k_steps, m));
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int k = 0; k < k_steps; ++k) {
    const Vec3 ref = motion[k].rot_bn * field(motion[k].position);
    out.reference[k] = ref.norm();
    for (int i = 0; i < m; ++i) {
      Vec3 y = (ref + true_calib.bias[i]).cwiseQuotient(true_calib.scale[i]);
      for (int a = 0; a < 3; ++a) {
        y[a] += sigma_y * normal(rng);
      }
      out.uncalibrated(k, i) = y.norm();
      for (size_t v = 0; v < candidates.size(); ++v) {
        out.corrected[v](k, i) =
            (candidates[v].scale[i].cwiseProduct(y) - candidates[v].bias[i]).norm();
      }
    }
  }
  return out;
}

} // namespace magslam
