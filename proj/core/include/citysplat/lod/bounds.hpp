#pragma once

#include "citysplat/core/types.hpp"

#include <span>
#include <vector>

namespace citysplat::lod {

/// Median with the mean of the two middle values for even counts.
double median(std::vector<double> values);

/// Per axis: MAD = median(|p - median|), bounds are
/// [max(min p, median - n_mad MAD), min(max p, median + n_mad MAD)].
/// A zero MAD or an infinite n_mad gives the exact min/max on that axis.
/// Throws InvalidParameter for an empty input or negative/NaN n_mad.
Bounds3 mad_bounds(std::span<const Eigen::Vector3d> positions, double n_mad);
Bounds3 mad_bounds(const GaussianCloud& cloud, double n_mad);

} // namespace citysplat::lod
