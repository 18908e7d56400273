#include "citysplat/lod/bounds.hpp"

#include "citysplat/core/errors.hpp"

#include <algorithm>
#include <cmath>

namespace citysplat::lod {

double median(std::vector<double> v) {
    if (v.empty()) {
        throw InvalidParameter("median of an empty set");
    }
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) {
        return upper;
    }
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

Bounds3 mad_bounds(std::span<const Eigen::Vector3d> positions, double n_mad) {
    if (positions.empty()) {
        throw InvalidParameter("mad_bounds of an empty block");
    }
    if (std::isnan(n_mad) || n_mad < 0.0) {
        throw InvalidParameter("n_mad must be non-negative");
    }
    Bounds3 out;
    std::vector<double> axis(positions.size());
    for (int a = 0; a < 3; ++a) {
        for (std::size_t i = 0; i < positions.size(); ++i) {
            axis[i] = positions[i][a];
        }
        const auto [lo_it, hi_it] = std::minmax_element(axis.begin(), axis.end());
        const double lo = *lo_it;
        const double hi = *hi_it;
        out.min[a] = lo;
        out.max[a] = hi;
        if (std::isinf(n_mad)) {
            continue;
        }
        const double med = median(axis);
        std::vector<double> dev(axis.size());
        for (std::size_t i = 0; i < axis.size(); ++i) {
            dev[i] = std::abs(axis[i] - med);
        }
        const double mad = median(std::move(dev));
        if (mad == 0.0) {
            continue;
        }
        out.min[a] = std::max(lo, med - n_mad * mad);
        out.max[a] = std::min(hi, med + n_mad * mad);
    }
    return out;
}

Bounds3 mad_bounds(const GaussianCloud& cloud, double n_mad) {
    std::vector<Eigen::Vector3d> p;
    p.reserve(cloud.size());
    for (const auto& g : cloud.gaussians) {
        p.push_back(g.position);
    }
    return mad_bounds(p, n_mad);
}

} // namespace citysplat::lod
