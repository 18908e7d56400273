#pragma once

#include "citysplat/core/types.hpp"

#include <cstdint>
#include <vector>

namespace citysplat::lod {

struct SignificanceOptions {
    double near_plane = 0.01;
    double beta = 0.1;
    double volume_percentile = 0.9;
    unsigned threads = 0;
};

/// score_k = hits_k * opacity_k * min(volume_k, P)^beta, where volume_k is
/// the product of the scale components, P its nearest-rank percentile over
/// the cloud, and hits_k the number of cameras for which the Gaussian lies in
/// front of the near plane, its centre projects inside the image and the 3
/// sigma radius of its projected covariance (no low-pass) is at least 1 px.
/// With no cameras every Gaussian counts one hit.
std::vector<double> significance_scores(const GaussianCloud& cloud, const std::vector<CameraView>& cameras,
                                        const SignificanceOptions& options = {});

/// ceil(rate * count), ignoring floating-point noise below 1e-9 relative.
std::size_t keep_count(std::size_t count, double rate);

/// Indices of the keep_count(n, rate) highest scores, ties to the lower
/// index, returned in ascending index order.
std::vector<std::uint32_t> select_top(const std::vector<double>& scores, double rate);

/// Keeps the selected Gaussians in source order and drops SH bands above
/// sh_degree (the result's sh_degree is min(sh_degree, cloud.sh_degree)).
/// Throws InvalidParameter for rate outside (0,1] or sh_degree outside 0..3.
GaussianCloud compress(const GaussianCloud& cloud, double rate, int sh_degree,
                       const std::vector<CameraView>& cameras);
GaussianCloud compress_with_scores(const GaussianCloud& cloud, const std::vector<double>& scores, double rate,
                                   int sh_degree);

} // namespace citysplat::lod
