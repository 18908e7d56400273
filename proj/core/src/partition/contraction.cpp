#include "citysplat/partition/contraction.hpp"

#include "citysplat/core/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace citysplat::partition {

void ContractionMap::validate() const {
    if (!p_min.allFinite() || !p_max.allFinite()) {
        throw InvalidParameter("contraction bounds must be finite");
    }
    for (int a = 0; a < 3; ++a) {
        if (!(p_max[a] > p_min[a])) {
            throw InvalidParameter(fmt::format("foreground max must exceed min on axis {} ({} vs {})", a,
                                               p_max[a], p_min[a]));
        }
    }
}

Eigen::Vector3d normalize_position(const Eigen::Vector3d& p, const ContractionMap& map) {
    return (2.0 * (p - map.p_min).array() / (map.p_max - map.p_min).array() - 1.0).matrix();
}

Eigen::Vector3d contract(const Eigen::Vector3d& p_hat) {
    if (!p_hat.allFinite()) {
        throw InvalidParameter("contract: non-finite input");
    }
    const double m = p_hat.cwiseAbs().maxCoeff();
    if (m <= 1.0) {
        return p_hat;
    }
    return (2.0 - 1.0 / m) * (p_hat / m);
}

ContractionMap foreground_map(const GaussianCloud& cloud, const io::RunConfig& config) {
    Eigen::Vector3d lo = Eigen::Vector3d::Zero();
    Eigen::Vector3d hi = Eigen::Vector3d::Zero();
    if (!cloud.empty()) {
        lo = Eigen::Vector3d::Constant(kInfinity);
        hi = Eigen::Vector3d::Constant(-kInfinity);
        for (const auto& g : cloud.gaussians) {
            lo = lo.cwiseMin(g.position);
            hi = hi.cwiseMax(g.position);
        }
    }

    ContractionMap map;
    if (config.foreground) {
        map.p_min = config.foreground->min;
        map.p_max = config.foreground->max;
        if (config.foreground->z_from_data) {
            map.p_min.z() = lo.z();
            map.p_max.z() = hi.z();
        }
    } else {
        const Eigen::Vector3d span = hi - lo;
        map.p_min = lo;
        map.p_max = hi;
        for (int a = 0; a < 2; ++a) {
            map.p_min[a] = lo[a] + span[a] / 3.0;
            map.p_max[a] = hi[a] - span[a] / 3.0;
        }
    }
    for (int a = 0; a < 3; ++a) {
        if (!(map.p_max[a] > map.p_min[a])) {
            const double pad = std::max(1e-3, 1e-6 * std::abs(map.p_min[a]));
            const double mid = 0.5 * (map.p_min[a] + map.p_max[a]);
            map.p_min[a] = mid - pad;
            map.p_max[a] = mid + pad;
        }
    }
    map.validate();
    return map;
}

} // namespace citysplat::partition
