#pragma once

#include "citysplat/core/types.hpp"

namespace citysplat {

namespace sh {
inline constexpr double kC0 = 0.28209479177387814;
inline constexpr double kC1 = 0.4886025119029199;
inline constexpr double kC2[5] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                                  -1.0925484305920792, 0.5462742152960396};
inline constexpr double kC3[7] = {-0.5900435899266435, 2.890611442640554, -0.4570457994644658,
                                  0.3731763325901154,  -0.4570457994644658, 1.445305721320277,
                                  -0.5900435899266435};
} // namespace sh

/// View-dependent RGB from real SH coefficients up to `degree`, offset by 0.5
/// and clamped to [0,1]. `view_dir` points from the camera towards the Gaussian.
Eigen::Vector3d sh_to_color(const ShCoefficients& coeffs, const Eigen::Vector3d& view_dir, int degree);

/// Band-0 coefficient that yields `rgb` under sh_to_color.
Eigen::Vector3f rgb_to_sh_dc(const Eigen::Vector3f& rgb);

/// Zeroes every coefficient above `degree`.
void truncate_sh(ShCoefficients& coeffs, int degree);

} // namespace citysplat
