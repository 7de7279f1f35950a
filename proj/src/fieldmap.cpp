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

#include "magslam/fieldmap.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace magslam {

namespace {

constexpr int kMaxIndexPerAxis = 1024;
constexpr long long kMaxCandidates = 40'000'000;

bool mode_less(const Mode &a, const Mode &b) {
  if (a.eigenvalue != b.eigenvalue) {
    return a.eigenvalue < b.eigenvalue;
  }
  return a.index < b.index;
}

} // namespace

bool DomainBox::contains(const Vec3 &p) const {
  return (p.array() >= lower.array()).all() &&
         (p.array() <= upper.array()).all();
}

void DomainBox::validate() const {
  if (!lower.allFinite() || !upper.allFinite()) {
    throw std::invalid_argument("domain bounds must be finite");
  }
  for (int d = 0; d < 3; ++d) {
    if (!(upper[d] > lower[d])) {
      throw std::invalid_argument("domain has zero or negative thickness along axis " +
                                  std::to_string(d));
    }
  }
}

DomainBox build_domain(std::span<const Vec3> positions, double margin) {
  if (positions.empty()) {
    throw std::invalid_argument("build_domain: empty position list");
  }
  if (!(margin >= 0.0)) {
    throw std::invalid_argument("build_domain: margin must be non-negative");
  }
  DomainBox box;
  box.lower = positions.front();
  box.upper = positions.front();
  for (const auto &p : positions) {
    box.lower = box.lower.cwiseMin(p);
    box.upper = box.upper.cwiseMax(p);
  }
  box.lower.array() -= margin;
  box.upper.array() += margin;
  box.validate();
  return box;
}

void GpHyper::validate() const {
  auto check = [](double v, const char *name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument(std::string(name) + " must be strictly positive");
    }
  };
  check(length_scale, "length_scale");
  check(sigma_se, "sigma_se");
  check(sigma_lin, "sigma_lin");
  check(sigma_y, "sigma_y");
}

double spectral_density_se(double omega, const GpHyper &hyper) {
  const double l2 = hyper.length_scale * hyper.length_scale;
  return hyper.sigma_se * hyper.sigma_se * std::pow(2.0 * kPi * l2, 1.5) *
         std::exp(-0.5 * omega * omega * l2);
}

// ---------------------------------------------------------------------------

struct BasisSet::AxisTables {
  std::array<std::vector<double>, 3> s;
  std::array<std::vector<double>, 3> c;
};

BasisSet::BasisSet(DomainBox domain, std::vector<Mode> modes)
    : domain_(domain), modes_(std::move(modes)) {
  domain_.validate();
  const Vec3 ext = domain_.extent();
  for (int d = 0; d < 3; ++d) {
    norm_[d] = std::sqrt(2.0 / ext[d]);
    freq_unit_[d] = kPi / ext[d];
    max_index_[d] = 0;
  }
  for (const auto &m : modes_) {
    for (int d = 0; d < 3; ++d) {
      if (m.index[d] < 1) {
        throw std::invalid_argument("basis mode indices start at 1");
      }
      max_index_[d] = std::max(max_index_[d], m.index[d]);
    }
  }
}

void BasisSet::fill_tables(const Vec3 &p, AxisTables &t) const {
  for (int d = 0; d < 3; ++d) {
    const double c = p[d] - domain_.lower[d];
    const int n = max_index_[d] + 1;
    t.s[d].resize(n);
    t.c[d].resize(n);
    for (int j = 0; j < n; ++j) {
      const double arg = freq_unit_[d] * j * c;
      t.s[d][j] = std::sin(arg);
      t.c[d][j] = std::cos(arg);
    }
  }
}

Eigen::VectorXd BasisSet::phi(const Vec3 &p) const {
  AxisTables t;
  fill_tables(p, t);
  Eigen::VectorXd out(n_weights());
  out.head<3>() = p;
  const double norm = norm_[0] * norm_[1] * norm_[2];
  for (int k = 0; k < n_modes(); ++k) {
    const auto &j = modes_[k].index;
    out[kLinearSlots + k] = norm * t.s[0][j[0]] * t.s[1][j[1]] * t.s[2][j[2]];
  }
  return out;
}

Matrix3X BasisSet::grad_phi(const Vec3 &p) const {
  Matrix3X grad;
  Mat3 unused;
  evaluate(p, Eigen::VectorXd::Zero(n_weights()), grad, unused);
  return grad;
}

std::vector<Mat3> BasisSet::hess_phi(const Vec3 &p) const {
  AxisTables t;
  fill_tables(p, t);
  std::vector<Mat3> out(n_weights(), Mat3::Zero());
  const double norm = norm_[0] * norm_[1] * norm_[2];
  for (int k = 0; k < n_modes(); ++k) {
    const auto &j = modes_[k].index;
    const double wx = freq_unit_[0] * j[0];
    const double wy = freq_unit_[1] * j[1];
    const double wz = freq_unit_[2] * j[2];
    const double sx = t.s[0][j[0]], sy = t.s[1][j[1]], sz = t.s[2][j[2]];
    const double cx = t.c[0][j[0]], cy = t.c[1][j[1]], cz = t.c[2][j[2]];
    Mat3 &h = out[kLinearSlots + k];
    h(0, 0) = -norm * wx * wx * sx * sy * sz;
    h(1, 1) = -norm * wy * wy * sx * sy * sz;
    h(2, 2) = -norm * wz * wz * sx * sy * sz;
    h(0, 1) = h(1, 0) = norm * wx * wy * cx * cy * sz;
    h(0, 2) = h(2, 0) = norm * wx * wz * cx * sy * cz;
    h(1, 2) = h(2, 1) = norm * wy * wz * sx * cy * cz;
  }
  return out;
}

bool BasisSet::evaluate(const Vec3 &p, const Eigen::VectorXd &weights,
                        Matrix3X &grad, Mat3 &field_jacobian) const {
  AxisTables t;
  fill_tables(p, t);
  grad.resize(3, n_weights());
  grad.leftCols<3>().setIdentity();
  double jxx = 0, jyy = 0, jzz = 0, jxy = 0, jxz = 0, jyz = 0;
  const double norm = norm_[0] * norm_[1] * norm_[2];
  for (int k = 0; k < n_modes(); ++k) {
    const auto &j = modes_[k].index;
    const double wx = freq_unit_[0] * j[0];
    const double wy = freq_unit_[1] * j[1];
    const double wz = freq_unit_[2] * j[2];
    const double sx = t.s[0][j[0]], sy = t.s[1][j[1]], sz = t.s[2][j[2]];
    const double cx = t.c[0][j[0]], cy = t.c[1][j[1]], cz = t.c[2][j[2]];
    const int col = kLinearSlots + k;
    grad(0, col) = norm * wx * cx * sy * sz;
    grad(1, col) = norm * wy * sx * cy * sz;
    grad(2, col) = norm * wz * sx * sy * cz;
    const double m = weights[col];
    if (m != 0.0) {
      const double mn = m * norm;
      const double sss = sx * sy * sz;
      jxx -= mn * wx * wx * sss;
      jyy -= mn * wy * wy * sss;
      jzz -= mn * wz * wz * sss;
      jxy += mn * wx * wy * cx * cy * sz;
      jxz += mn * wx * wz * cx * sy * cz;
      jyz += mn * wy * wz * sx * cy * cz;
    }
  }
  field_jacobian << jxx, jxy, jxz,
                    jxy, jyy, jyz,
                    jxz, jyz, jzz;
  return domain_.contains(p);
}

Vec3 BasisSet::field(const Vec3 &p, const Eigen::VectorXd &weights) const {
  AxisTables t;
  fill_tables(p, t);
  Vec3 f = weights.head<3>();
  const double norm = norm_[0] * norm_[1] * norm_[2];
  for (int k = 0; k < n_modes(); ++k) {
    const auto &j = modes_[k].index;
    const double sx = t.s[0][j[0]], sy = t.s[1][j[1]], sz = t.s[2][j[2]];
    const double cx = t.c[0][j[0]], cy = t.c[1][j[1]], cz = t.c[2][j[2]];
    const double mn = weights[kLinearSlots + k] * norm;
    f.x() += mn * freq_unit_[0] * j[0] * cx * sy * sz;
    f.y() += mn * freq_unit_[1] * j[1] * sx * cy * sz;
    f.z() += mn * freq_unit_[2] * j[2] * sx * sy * cz;
  }
  return f;
}

// ---------------------------------------------------------------------------

BasisSet build_basis(const DomainBox &domain, int n_se_modes,
                     const GpHyper &hyper) {
  domain.validate();
  hyper.validate();
  if (n_se_modes < 1) {
    throw std::invalid_argument("build_basis: n_se_modes must be >= 1");
  }
  // S_se is strictly decreasing in the eigenvalue, so ranking by ascending
  // eigenvalue keeps the largest spectral densities.
  const Vec3 ext = domain.extent();
  const int start = static_cast<int>(std::ceil(std::cbrt(static_cast<double>(n_se_modes)))) + 3;
  std::array<int, 3> jmax{start, start, start};
  std::vector<Mode> candidates;
  for (;;) {
    const long long total = 1LL * jmax[0] * jmax[1] * jmax[2];
    if (total > kMaxCandidates || *std::max_element(jmax.begin(), jmax.end()) > kMaxIndexPerAxis) {
      throw std::invalid_argument("build_basis: n_se_modes = " + std::to_string(n_se_modes) +
                                  " exceeds the candidate set after enlargement cap");
    }
    candidates.clear();
    candidates.reserve(static_cast<size_t>(total));
    for (int a = 1; a <= jmax[0]; ++a) {
      const double la = std::pow(kPi * a / ext[0], 2);
      for (int b = 1; b <= jmax[1]; ++b) {
        const double lb = std::pow(kPi * b / ext[1], 2);
        for (int c = 1; c <= jmax[2]; ++c) {
          const double lc = std::pow(kPi * c / ext[2], 2);
          candidates.push_back(Mode{{a, b, c}, la + lb + lc});
        }
      }
    }
    if (static_cast<long long>(candidates.size()) > n_se_modes) {
      std::partial_sort(candidates.begin(), candidates.begin() + n_se_modes,
                        candidates.end(), mode_less);
      candidates.resize(n_se_modes);
      bool grown = false;
      for (int d = 0; d < 3; ++d) {
        const bool touches = std::any_of(candidates.begin(), candidates.end(),
                                         [&](const Mode &m) { return m.index[d] >= jmax[d]; });
        if (touches) {
          jmax[d] *= 2;
          grown = true;
        }
      }
      if (!grown) {
        break;
      }
    } else {
      for (auto &j : jmax) {
        j *= 2;
      }
    }
  }
  return BasisSet(domain, std::move(candidates));
}

Eigen::VectorXd prior_weight_cov(const BasisSet &basis, const GpHyper &hyper) {
  Eigen::VectorXd diag(basis.n_weights());
  diag.head<3>().setConstant(hyper.sigma_lin * hyper.sigma_lin);
  for (int k = 0; k < basis.n_modes(); ++k) {
    diag[BasisSet::kLinearSlots + k] =
        spectral_density_se(std::sqrt(basis.modes()[k].eigenvalue), hyper);
  }
  return diag;
}

FieldPrediction predict_field(const BasisSet &basis,
                              const Eigen::VectorXd &weights,
                              const Eigen::MatrixXd &err_cov_block,
                              const Vec3 &p) {
  const int n = basis.n_weights();
  if (weights.size() != n || err_cov_block.rows() != n || err_cov_block.cols() != n) {
    throw std::invalid_argument("predict_field: dimension mismatch");
  }
  Matrix3X grad;
  Mat3 jac;
  FieldPrediction out;
  out.inside = basis.evaluate(p, weights, grad, jac);
  out.mean = grad * weights;
  out.var = grad * err_cov_block * grad.transpose();
  return out;
}

} // namespace magslam
