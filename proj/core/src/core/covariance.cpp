#include "citysplat/core/covariance.hpp"

#include "citysplat/core/errors.hpp"

namespace citysplat {

Eigen::Matrix3d rotation_matrix(const Eigen::Quaterniond& q) {
    const double w = q.w();
    const double x = q.x();
    const double y = q.y();
    const double z = q.z();
    Eigen::Matrix3d r;
    r << 1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y),
        2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x),
        2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y);
    return r;
}

Eigen::Matrix3d build_covariance(const Eigen::Vector3d& scale, const Eigen::Quaterniond& rotation) {
    if (!scale.allFinite() || !rotation.coeffs().allFinite()) {
        throw InvalidParameter("covariance inputs must be finite");
    }
    const Eigen::Matrix3d r = rotation_matrix(rotation);
    const Eigen::Matrix3d m = r * scale.asDiagonal();
    Eigen::Matrix3d cov = m * m.transpose();
    // Exact symmetry; the product is symmetric only up to rounding.
    return 0.5 * (cov + cov.transpose());
}

} // namespace citysplat
