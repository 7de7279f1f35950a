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

#include "magslam/filter.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <cmath>
#include <string>

namespace magslam {

namespace {

constexpr double kKnownPoseInfo = 1e12;

StateLayout layout_of(const FilterState &s, int n_mag_hint = 0) {
  StateLayout sl;
  sl.n_weights = static_cast<int>(s.weights.size());
  sl.calibrated = s.calib.has_value();
  sl.n_mag = s.calib ? s.calib->n_mag() : n_mag_hint;
  return sl;
}

void symmetrize(Eigen::MatrixXd &a) {
  a = 0.5 * (a + a.transpose()).eval();
}

} // namespace

bool FilterState::finite() const {
  if (!position.allFinite() || !rot_bn.allFinite() || !weights.allFinite()) {
    return false;
  }
  if (calib) {
    for (int i = 0; i < calib->n_mag(); ++i) {
      if (!calib->scale[i].allFinite() || !calib->bias[i].allFinite()) {
        return false;
      }
    }
  }
  return true;
}

void NoiseConfig::validate() const {
  auto psd = [](const Mat3 &m, const char *name) {
    Eigen::SelfAdjointEigenSolver<Mat3> es(0.5 * (m + m.transpose()));
    if (!m.allFinite() || es.eigenvalues().minCoeff() < 0.0) {
      throw std::invalid_argument(std::string(name) + " must be positive semi-definite");
    }
  };
  psd(q_pos, "q_pos");
  psd(q_rot, "q_rot");
  if (!(sigma_ver > 0.0)) {
    throw std::invalid_argument("sigma_ver must be positive");
  }
  if (!(sigma_y > 0.0)) {
    throw std::invalid_argument("sigma_y must be positive");
  }
  if (!(prior_scale_var > 0.0) || !(prior_bias_var > 0.0)) {
    throw std::invalid_argument("calibration prior variances must be positive");
  }
}

StateLayout state_layout(const BasisSet &basis, const ArrayLayout &layout,
                         FilterMode mode) {
  StateLayout sl;
  sl.n_weights = basis.n_weights();
  sl.n_mag = layout.n_mag();
  sl.calibrated = mode == FilterMode::Slcamma;
  return sl;
}

std::pair<FilterState, InfoForm> init_filter(const NoiseConfig &noise,
                                             const GpHyper &hyper,
                                             const BasisSet &basis,
                                             const ArrayLayout &layout,
                                             FilterMode mode) {
  const StateLayout sl = state_layout(basis, layout, mode);
  const Eigen::VectorXd prior_w = prior_weight_cov(basis, hyper);
  if (!(prior_w.array() > 0.0).all() || !prior_w.allFinite()) {
    throw std::invalid_argument("init_filter: singular prior weight covariance");
  }
  FilterState state;
  state.weights = Eigen::VectorXd::Zero(sl.n_weights);
  InfoForm info;
  info.mat = Eigen::MatrixXd::Zero(sl.dim(), sl.dim());
  info.vec = Eigen::VectorXd::Zero(sl.dim());
  info.mat.diagonal().head<6>().setConstant(kKnownPoseInfo);
  info.mat.diagonal().segment(StateLayout::kMap, sl.n_weights) = prior_w.cwiseInverse();
  if (sl.calibrated) {
    state.calib = Calibration::identity(sl.n_mag);
    info.mat.diagonal().segment(sl.scale(), 3 * sl.n_mag).setConstant(1.0 / noise.prior_scale_var);
    info.mat.diagonal().segment(sl.bias(), 3 * sl.n_mag).setConstant(1.0 / noise.prior_bias_var);
  }
  return {std::move(state), std::move(info)};
}

void dynamic_update(FilterState &state, InfoForm &info, const Vec3 &dp_body,
                    const Mat3 &drot, const Mat3 &q_pos, const Mat3 &q_rot) {
  const Mat3 rot_nb = state.rot_bn.transpose();
  Eigen::MatrixXd &m = info.mat;
  const Eigen::Index n = m.rows();

  // F^-1 differs from the identity only in the (dp, eta) block: -R^nb [dp x].
  const Mat3 a = -rot_nb * skew(dp_body);
  m.middleCols<3>(3) += m.leftCols<3>() * a;
  m.middleRows<3>(3) += a.transpose() * m.topRows<3>();

  // Woodbury propagation with G = [R^nb 0; 0 I; 0 0].
  Eigen::MatrixXd ig(n, 6);
  ig.leftCols<3>() = m.leftCols<3>() * rot_nb;
  ig.rightCols<3>() = m.middleCols<3>(3);
  Eigen::Matrix<double, 6, 6> gig;
  gig.topRows<3>() = rot_nb.transpose() * ig.topRows<3>();
  gig.bottomRows<3>() = ig.middleRows<3>(3);
  Eigen::Matrix<double, 6, 6> q = Eigen::Matrix<double, 6, 6>::Zero();
  q.topLeftCorner<3, 3>() = q_pos;
  q.bottomRightCorner<3, 3>() = q_rot;
  // (Q^-1 + G^T I G)^-1 = (I + Q G^T I G)^-1 Q, valid for singular Q as well.
  const Eigen::Matrix<double, 6, 6> lhs = Eigen::Matrix<double, 6, 6>::Identity() + q * gig;
  Eigen::FullPivLU<Eigen::Matrix<double, 6, 6>> lu(lhs);
  if (!lu.isInvertible()) {
    throw DivergenceError("dynamic update: singular innovation term");
  }
  const Eigen::Matrix<double, 6, 6> s_inv = lu.solve(q);
  m.noalias() -= ig * s_inv * ig.transpose();
  info.asymmetry = relative_asymmetry(m);
  symmetrize(m);
  info.vec.setZero(n);

  state.position += rot_nb * dp_body;
  state.rot_bn = orthonormalize(drot * state.rot_bn);
}

void retract(FilterState &state, const StateLayout &sl, const Eigen::VectorXd &dx) {
  state.position += dx.segment<3>(StateLayout::kPos);
  state.rot_bn = orthonormalize(exp_rot(dx.segment<3>(StateLayout::kRot)) * state.rot_bn);
  state.weights += dx.segment(StateLayout::kMap, sl.n_weights);
  if (sl.calibrated && state.calib) {
    for (int i = 0; i < sl.n_mag; ++i) {
      state.calib->scale[i] += dx.segment<3>(sl.scale() + 3 * i);
      state.calib->bias[i] += dx.segment<3>(sl.bias() + 3 * i);
    }
  }
}

Eigen::VectorXd state_difference(const FilterState &a, const FilterState &b,
                                 const StateLayout &sl) {
  Eigen::VectorXd e(sl.dim());
  e.segment<3>(StateLayout::kPos) = a.position - b.position;
  e.segment<3>(StateLayout::kRot) = log_rot(a.rot_bn * b.rot_bn.transpose());
  e.segment(StateLayout::kMap, sl.n_weights) = a.weights - b.weights;
  if (sl.calibrated) {
    for (int i = 0; i < sl.n_mag; ++i) {
      e.segment<3>(sl.scale() + 3 * i) = a.calib->scale[i] - b.calib->scale[i];
      e.segment<3>(sl.bias() + 3 * i) = a.calib->bias[i] - b.calib->bias[i];
    }
  }
  return e;
}

Eigen::VectorXd solve_spd(const Eigen::MatrixXd &a, const Eigen::VectorXd &b) {
  const Eigen::VectorXd diag = a.diagonal();
  if (!(diag.array() > 0.0).all() || !diag.allFinite()) {
    throw DivergenceError("information matrix has a non-positive diagonal");
  }
  const Eigen::VectorXd s = diag.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd scaled = s.asDiagonal() * a * s.asDiagonal();
  const Eigen::VectorXd rhs = s.cwiseProduct(b);
  double jitter = 0.0;
  for (;;) {
    Eigen::LLT<Eigen::MatrixXd> llt(scaled);
    if (llt.info() == Eigen::Success) {
      Eigen::VectorXd x = s.cwiseProduct(llt.solve(rhs));
      if (x.allFinite()) {
        return x;
      }
    }
    const double next = jitter == 0.0 ? 1e-12 : jitter * 100.0;
    if (next > 1e-6 * 1.0000001) {
      throw DivergenceError("information matrix factorisation failed");
    }
    scaled.diagonal().array() += next - jitter;
    jitter = next;
  }
}

double relative_asymmetry(const Eigen::MatrixXd &a) {
  const double scale = a.cwiseAbs().maxCoeff();
  if (scale == 0.0) {
    return 0.0;
  }
  return (a - a.transpose()).cwiseAbs().maxCoeff() / scale;
}

void vertical_update(FilterState &state, InfoForm &info, double y_ver, double sigma_ver) {
  if (!(sigma_ver > 0.0)) {
    throw std::invalid_argument("vertical_update: sigma_ver must be positive");
  }
  const StateLayout sl = layout_of(state);
  const double z = y_ver - state.position.z();
  info.mat(2, 2) += 1.0 / sigma_ver;
  info.vec.setZero(info.mat.rows());
  info.vec(2) = z / sigma_ver;
  const Eigen::VectorXd dx = solve_spd(info.mat, info.vec);
  retract(state, sl, dx);
  info.vec.setZero();
  if (!state.finite()) {
    throw DivergenceError("vertical update produced a non-finite state");
  }
}

MagLinearization mag_linearize(const FilterState &state, const ArrayLayout &layout,
                               const BasisSet &basis, const ArrayMeasurement &y,
                               double sigma_y) {
  const int n_mag = layout.n_mag();
  if (y.n_mag() != n_mag) {
    throw std::invalid_argument("measurement and layout sensor counts differ");
  }
  StateLayout sl = layout_of(state, n_mag);
  sl.n_mag = n_mag;
  const int w = sl.n_weights;
  const Mat3 &r = state.rot_bn;
  const Mat3 rot_nb = r.transpose();

  MagLinearization lin;
  lin.jacobian = Eigen::MatrixXd::Zero(3 * n_mag, sl.dim());
  lin.residual.resize(3 * n_mag);
  lin.noise_var.resize(3 * n_mag);
  Matrix3X grad;
  Mat3 field_jac;
  for (int i = 0; i < n_mag; ++i) {
    const Vec3 &s = layout.sensor_positions[i];
    const Vec3 q = state.position + rot_nb * s;
    if (!basis.evaluate(q, state.weights, grad, field_jac)) {
      ++lin.outside;
    }
    const Vec3 f_body = r * (grad * state.weights);
    const Vec3 yi = y.sensor(i);
    Vec3 d = Vec3::Ones();
    Vec3 b = Vec3::Zero();
    if (sl.calibrated) {
      d = state.calib->scale[i];
      b = state.calib->bias[i];
    }
    lin.residual.segment<3>(3 * i) = d.cwiseProduct(yi) - f_body - b;
    lin.noise_var.segment<3>(3 * i) = sigma_y * sigma_y * d.cwiseAbs2();

    auto rows = lin.jacobian.middleRows<3>(3 * i);
    const Mat3 rj = r * field_jac;
    rows.middleCols<3>(StateLayout::kPos) = -rj;
    // q moves by R^nb [s x] eta under R^bn <- exp(eta) R^bn.
    rows.middleCols<3>(StateLayout::kRot) = -rj * rot_nb * skew(s) + skew(f_body);
    rows.middleCols(StateLayout::kMap, w) = -r * grad;
    if (sl.calibrated) {
      rows.middleCols<3>(sl.scale() + 3 * i) = yi.asDiagonal();
      rows.middleCols<3>(sl.bias() + 3 * i) = -Mat3::Identity();
    }
  }
  return lin;
}

Eigen::MatrixXd mag_jacobian(const FilterState &state, const ArrayLayout &layout,
                             const BasisSet &basis, const ArrayMeasurement &y) {
  return mag_linearize(state, layout, basis, y, 1.0).jacobian;
}

Eigen::VectorXd mag_residual(const FilterState &state, const ArrayLayout &layout,
                             const BasisSet &basis, const ArrayMeasurement &y) {
  const Mat3 rot_nb = state.rot_bn.transpose();
  Eigen::VectorXd z(3 * layout.n_mag());
  for (int i = 0; i < layout.n_mag(); ++i) {
    const Vec3 q = state.position + rot_nb * layout.sensor_positions[i];
    const Vec3 f_body = state.rot_bn * basis.field(q, state.weights);
    Vec3 d = Vec3::Ones();
    Vec3 b = Vec3::Zero();
    if (state.calib) {
      d = state.calib->scale[i];
      b = state.calib->bias[i];
    }
    z.segment<3>(3 * i) = d.cwiseProduct(y.sensor(i)) - f_body - b;
  }
  return z;
}

MagUpdateResult mag_update_iterated(FilterState &state, InfoForm &info,
                                    const ArrayMeasurement &y,
                                    const ArrayLayout &layout,
                                    const BasisSet &basis, double sigma_y,
                                    const IterationOptions &opts) {
  StateLayout sl = layout_of(state, layout.n_mag());
  sl.n_mag = layout.n_mag();
  if (info.mat.rows() != sl.dim()) {
    throw std::invalid_argument("mag update: information matrix does not match the state");
  }
  const FilterState prior = state;
  const Eigen::MatrixXd &prior_info = info.mat;
  Eigen::MatrixXd post_info;
  Eigen::VectorXd rhs;
  MagUpdateResult result;

  for (int tau = 0; tau < opts.tau_max; ++tau) {
    const MagLinearization lin = mag_linearize(state, layout, basis, y, sigma_y);
    if (!lin.residual.allFinite()) {
      throw DivergenceError("mag update: non-finite residual");
    }
    result.outside = lin.outside;
    const Eigen::VectorXd inv_sd = lin.noise_var.cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd hw = inv_sd.asDiagonal() * lin.jacobian;
    const Eigen::VectorXd zw = inv_sd.cwiseProduct(lin.residual);

    post_info = prior_info;
    post_info.selfadjointView<Eigen::Lower>().rankUpdate(hw.transpose());
    post_info.triangularView<Eigen::StrictlyUpper>() =
        post_info.transpose().triangularView<Eigen::StrictlyUpper>();

    // Gauss-Newton on the MAP objective; at tau = 0 the prior offset vanishes.
    rhs.noalias() = -hw.transpose() * zw;
    if (tau > 0) {
      rhs.noalias() -= prior_info * state_difference(state, prior, sl);
    }
    const Eigen::VectorXd dx = solve_spd(post_info, rhs);
    const double dp = dx.segment<3>(StateLayout::kPos).norm();
    const double deta = dx.segment<3>(StateLayout::kRot).norm();
    if (dp > opts.max_position_step) {
      throw DivergenceError("mag update: position increment of " + std::to_string(dp) + " m");
    }
    retract(state, sl, dx);
    if (!state.finite()) {
      throw DivergenceError("mag update: non-finite state");
    }
    if (state.calib) {
      for (const auto &d : state.calib->scale) {
        if (!(d.array() > 0.0).all()) {
          throw DivergenceError("mag update: non-positive scale estimate");
        }
      }
    }
    result.iterations = tau + 1;
    result.last_step_norm = dx.norm();
    if (dp < opts.conv_position && deta < opts.conv_rotation) {
      result.converged = true;
      break;
    }
  }
  info.mat = std::move(post_info);
  info.vec.setZero(info.mat.rows());
  return result;
}

// ---------------------------------------------------------------------------

std::vector<Pose> RunResult::trajectory() const {
  std::vector<Pose> out;
  out.reserve(steps.size());
  for (const auto &s : steps) {
    out.push_back(s.pose);
  }
  return out;
}

int RunResult::max_iterations() const {
  int m = 0;
  for (const auto &s : steps) {
    m = std::max(m, s.iterations);
  }
  return m;
}

std::vector<Pose> dead_reckoning(const Dataset &data) {
  std::vector<Pose> out;
  out.reserve(data.n_steps() + 1);
  Pose pose;
  out.push_back(pose);
  for (int k = 0; k < data.n_steps(); ++k) {
    pose.position += pose.rot_bn.transpose() * data.odom_dp[k];
    pose.rot_bn = orthonormalize(data.odom_drot[k] * pose.rot_bn);
    out.push_back(pose);
  }
  return out;
}

RunResult run_slam(const Dataset &data, const BasisSet &basis, const SlamOptions &opts) {
  data.validate();
  opts.noise.validate();
  if (opts.vertical_update && !data.has_ground_truth()) {
    throw std::invalid_argument("vertical update needs ground-truth heights");
  }
  auto [state, info] = init_filter(opts.noise, opts.hyper, basis, data.layout, opts.mode);

  RunResult result;
  result.mode = opts.mode;
  result.steps.reserve(data.n_steps() + 1);
  result.steps.push_back(StepRecord{0, state.pose(), 0, false, 0});
  if (state.calib) {
    result.calib_history.push_back(*state.calib);
  }

  bool diverged = false;
  for (int k = 0; k < data.n_steps(); ++k) {
    StepRecord rec;
    rec.k = k + 1;
    if (!diverged) {
      try {
        dynamic_update(state, info, data.odom_dp[k], data.odom_drot[k], opts.noise.q_pos,
                       opts.noise.q_rot);
        if (opts.vertical_update) {
          vertical_update(state, info, data.ground_truth[k + 1].position.z(),
                          opts.noise.sigma_ver);
        }
        const MagUpdateResult mu = mag_update_iterated(
            state, info, data.measurements[k], data.layout, basis, opts.noise.sigma_y,
            opts.iteration);
        rec.iterations = mu.iterations;
        rec.outside = mu.outside;
      } catch (const DivergenceError &e) {
        diverged = true;
        result.divergence_step = k + 1;
        result.divergence_reason = e.what();
        // Continue from the propagated pose of the last healthy step.
        Pose last = result.steps.back().pose;
        last.position += last.rot_bn.transpose() * data.odom_dp[k];
        last.rot_bn = orthonormalize(data.odom_drot[k] * last.rot_bn);
        state.position = last.position;
        state.rot_bn = last.rot_bn;
      }
    } else {
      state.position += state.rot_bn.transpose() * data.odom_dp[k];
      state.rot_bn = orthonormalize(data.odom_drot[k] * state.rot_bn);
    }
    rec.diverged = diverged;
    rec.pose = state.pose();
    result.steps.push_back(rec);
    if (state.calib) {
      result.calib_history.push_back(*state.calib);
    }
  }
  result.weights = state.weights;
  result.info = std::move(info.mat);
  return result;
}

} // namespace magslam
