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

#ifndef MAGSLAM_FIELDMAP_HPP_
#define MAGSLAM_FIELDMAP_HPP_

#include <array>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "magslam/geometry.hpp"

namespace magslam {

using Matrix3X = Eigen::Matrix<double, 3, Eigen::Dynamic>;

/// Axis-aligned cuboid on which the Laplace eigenbasis lives.
struct DomainBox {
  Vec3 lower = Vec3::Zero();
  Vec3 upper = Vec3::Ones();

  Vec3 extent() const { return upper - lower; }
  bool contains(const Vec3 &p) const;
  void validate() const;
};

/// Bounding box of the positions, inflated by margin on every face.
DomainBox build_domain(std::span<const Vec3> positions, double margin);

/// Hyperparameters of the scalar-potential prior. sigma_se is at potential
/// scale (uT m); the field disturbance std is sigma_se / length_scale.
struct GpHyper {
  double length_scale = 1.0;
  double sigma_se = 1.0;
  double sigma_lin = 15.0;
  double sigma_y = 0.1;

  void validate() const;
};

/// Spectral density of the 3-D squared-exponential kernel.
double spectral_density_se(double omega, const GpHyper &hyper);

struct Mode {
  std::array<int, 3> index{1, 1, 1};
  double eigenvalue = 0.0; ///< m^-2
};

/**
 * Reduced-rank basis for the magnetic scalar potential.
 *
 * Weight slots 0..2 are the linear-kernel potentials p_x, p_y, p_z (their
 * gradients form a constant field); slot 3 + j is the j-th Dirichlet sine
 * eigenfunction of the Laplacian on the domain, ordered by ascending
 * eigenvalue. Immutable after construction, so evaluations are thread safe.
 */
class BasisSet {
public:
  static constexpr int kLinearSlots = 3;

  BasisSet(DomainBox domain, std::vector<Mode> modes);

  const DomainBox &domain() const { return domain_; }
  const std::vector<Mode> &modes() const { return modes_; }
  int n_modes() const { return static_cast<int>(modes_.size()); }
  int n_weights() const { return kLinearSlots + n_modes(); }

  /// Potential basis values (length n_weights).
  Eigen::VectorXd phi(const Vec3 &p) const;

  /// 3 x n_weights matrix whose columns are basis gradients; the field is
  /// grad_phi(p) * m.
  Matrix3X grad_phi(const Vec3 &p) const;

  /// Position-Hessian of every basis potential.
  std::vector<Mat3> hess_phi(const Vec3 &p) const;

  /// Gradient matrix and field Jacobian sum_j m_j H_j(p) in one pass.
  /// Returns false when p lies outside the domain (values are still the
  /// analytic continuation).
  bool evaluate(const Vec3 &p, const Eigen::VectorXd &weights, Matrix3X &grad,
                Mat3 &field_jacobian) const;

  /// Field grad_phi(p) * m without forming the gradient matrix.
  Vec3 field(const Vec3 &p, const Eigen::VectorXd &weights) const;

private:
  struct AxisTables;
  void fill_tables(const Vec3 &p, AxisTables &t) const;

  DomainBox domain_;
  std::vector<Mode> modes_;
  std::array<double, 3> norm_{};     // sqrt(2 / L_d)
  std::array<double, 3> freq_unit_{}; // pi / L_d
  std::array<int, 3> max_index_{};
};

/// Keeps the n_se_modes eigenfunctions with the largest spectral density.
/// Throws std::invalid_argument when that many modes cannot be enumerated.
BasisSet build_basis(const DomainBox &domain, int n_se_modes,
                     const GpHyper &hyper);

/// Diagonal of the prior weight covariance: sigma_lin^2 (x3) then
/// S_se(sqrt(lambda_j)).
Eigen::VectorXd prior_weight_cov(const BasisSet &basis, const GpHyper &hyper);

struct FieldPrediction {
  Vec3 mean = Vec3::Zero();
  Mat3 var = Mat3::Zero();
  bool inside = true;
};

FieldPrediction predict_field(const BasisSet &basis,
                              const Eigen::VectorXd &weights,
                              const Eigen::MatrixXd &err_cov_block,
                              const Vec3 &p);

} // namespace magslam

#endif // MAGSLAM_FIELDMAP_HPP_
