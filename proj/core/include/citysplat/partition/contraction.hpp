#pragma once

#include "citysplat/core/types.hpp"
#include "citysplat/io/config.hpp"

namespace citysplat::partition {

/// Foreground box mapped onto [-1,1]^3 before contraction.
struct ContractionMap {
    Eigen::Vector3d p_min = -Eigen::Vector3d::Ones();
    Eigen::Vector3d p_max = Eigen::Vector3d::Ones();

    /// Throws InvalidParameter unless p_max > p_min componentwise and both are finite.
    void validate() const;
};

/// 2 (p - p_min) / (p_max - p_min) - 1.
Eigen::Vector3d normalize_position(const Eigen::Vector3d& p, const ContractionMap& map);

/// Identity inside the unit cube, (2 - 1/m) p/m outside, m = |p|_inf.
/// Throws InvalidParameter for non-finite input.
Eigen::Vector3d contract(const Eigen::Vector3d& p_hat);

inline Eigen::Vector3d contract_world(const Eigen::Vector3d& p, const ContractionMap& map) {
    return contract(normalize_position(p, map));
}

/// Foreground from the config, or the central third of the cloud's x-y
/// extent when none is given. A z range taken from the data spans the
/// Gaussian positions. Degenerate axes are padded to a positive width.
ContractionMap foreground_map(const GaussianCloud& cloud, const io::RunConfig& config);

} // namespace citysplat::partition
