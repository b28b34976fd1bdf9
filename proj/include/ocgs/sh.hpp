#pragma once

#include <Eigen/Core>

#include <span>

namespace ocgs {

inline constexpr double kShC0 = 0.28209479177387814;

/// Real SH basis values for `degree` (0..3) at unit direction `dir`; writes (degree+1)^2 values.
void sh_basis(int degree, const Eigen::Vector3d& dir, std::span<double> out);

/// Color from coefficients laid out [coeff][channel]: max(sum_l basis_l * c_l + 0.5, 0).
/// Only the first (degree+1)^2 coefficients are read.
Eigen::Vector3d eval_sh_color(std::span<const double> coeffs, const Eigen::Vector3d& dir, int degree);

/// Adjoint of eval_sh_color. Accumulates into `grad_coeffs` (same layout as coeffs) and,
/// when non-null, into `grad_dir` (gradient w.r.t. the unit direction components).
void eval_sh_color_backward(std::span<const double> coeffs, const Eigen::Vector3d& dir, int degree,
                            const Eigen::Vector3d& grad_rgb, std::span<double> grad_coeffs,
                            Eigen::Vector3d* grad_dir);

/// Degree-0 coefficient reproducing `rgb` under eval_sh_color.
inline Eigen::Vector3d rgb_to_sh_dc(const Eigen::Vector3d& rgb) {
  return (rgb.array() - 0.5) / kShC0;
}

}  // namespace ocgs
