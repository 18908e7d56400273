#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace citysplat {

/// Rotation matrix of a unit quaternion, expanded component-wise.
Eigen::Matrix3d rotation_matrix(const Eigen::Quaterniond& q);

/// World-space covariance R diag(scale^2) R^T of a Gaussian.
/// Throws InvalidParameter for non-finite inputs.
Eigen::Matrix3d build_covariance(const Eigen::Vector3d& scale, const Eigen::Quaterniond& rotation);

} // namespace citysplat
