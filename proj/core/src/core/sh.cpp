#include "citysplat/core/sh.hpp"

#include "citysplat/core/errors.hpp"

#include <fmt/format.h>

#include <algorithm>

namespace citysplat {

Eigen::Vector3d sh_to_color(const ShCoefficients& coeffs, const Eigen::Vector3d& view_dir, int degree) {
    if (degree < 0 || degree > kMaxShDegree) {
        throw InvalidParameter(fmt::format("SH degree {} outside 0..3", degree));
    }
    if (!view_dir.allFinite()) {
        throw InvalidParameter("SH view direction is not finite");
    }
    auto c = [&](int k) { return coeffs.row(k).transpose().cast<double>(); };

    Eigen::Vector3d result = sh::kC0 * c(0);
    if (degree > 0) {
        const double x = view_dir.x();
        const double y = view_dir.y();
        const double z = view_dir.z();
        result += -sh::kC1 * y * c(1) + sh::kC1 * z * c(2) - sh::kC1 * x * c(3);
        if (degree > 1) {
            const double xx = x * x, yy = y * y, zz = z * z;
            const double xy = x * y, yz = y * z, xz = x * z;
            result += sh::kC2[0] * xy * c(4) + sh::kC2[1] * yz * c(5) +
                      sh::kC2[2] * (2.0 * zz - xx - yy) * c(6) + sh::kC2[3] * xz * c(7) +
                      sh::kC2[4] * (xx - yy) * c(8);
            if (degree > 2) {
                result += sh::kC3[0] * y * (3.0 * xx - yy) * c(9) + sh::kC3[1] * xy * z * c(10) +
                          sh::kC3[2] * y * (4.0 * zz - xx - yy) * c(11) +
                          sh::kC3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy) * c(12) +
                          sh::kC3[4] * x * (4.0 * zz - xx - yy) * c(13) +
                          sh::kC3[5] * z * (xx - yy) * c(14) + sh::kC3[6] * x * (xx - 3.0 * yy) * c(15);
            }
        }
    }
    result.array() += 0.5;
    return result.cwiseMax(0.0).cwiseMin(1.0);
}

Eigen::Vector3f rgb_to_sh_dc(const Eigen::Vector3f& rgb) {
    return ((rgb.array() - 0.5f) / static_cast<float>(sh::kC0)).matrix();
}

void truncate_sh(ShCoefficients& coeffs, int degree) {
    const int keep = sh_coefficient_count(std::clamp(degree, 0, kMaxShDegree));
    coeffs.bottomRows(16 - keep).setZero();
}

} // namespace citysplat
