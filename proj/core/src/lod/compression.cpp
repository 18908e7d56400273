#include "citysplat/lod/compression.hpp"

#include "citysplat/core/covariance.hpp"
#include "citysplat/core/errors.hpp"
#include "citysplat/core/parallel.hpp"
#include "citysplat/core/sh.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace citysplat::lod {

namespace {

bool counts_as_hit(const Gaussian& g, const CameraView& cam, double near_plane) {
    const Eigen::Vector3d t = cam.to_camera(g.position);
    if (!(t.z() > near_plane)) {
        return false;
    }
    const double u = cam.fx * t.x() / t.z() + cam.cx;
    const double v = cam.fy * t.y() / t.z() + cam.cy;
    if (u < 0.0 || u >= cam.width || v < 0.0 || v >= cam.height) {
        return false;
    }
    const double z = t.z();
    Eigen::Matrix<double, 2, 3> j;
    j << cam.fx / z, 0.0, -cam.fx * t.x() / (z * z), 0.0, cam.fy / z, -cam.fy * t.y() / (z * z);
    const Eigen::Matrix<double, 2, 3> jw = j * cam.rotation_w2c;
    const Eigen::Matrix2d cov = jw * build_covariance(g.scale, g.rotation) * jw.transpose();
    const double mid = 0.5 * (cov(0, 0) + cov(1, 1));
    const double disc = std::sqrt(std::max(0.0, mid * mid - (cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(1, 0))));
    return 3.0 * std::sqrt(mid + disc) >= 1.0;
}

} // namespace

std::vector<double> significance_scores(const GaussianCloud& cloud, const std::vector<CameraView>& cameras,
                                        const SignificanceOptions& options) {
    const std::size_t n = cloud.size();
    std::vector<double> scores(n, 0.0);
    if (n == 0) {
        return scores;
    }
    for (const auto& cam : cameras) {
        validate(cam);
    }
    std::vector<double> volumes(n);
    for (std::size_t i = 0; i < n; ++i) {
        volumes[i] = cloud[i].scale.prod();
    }
    std::vector<double> sorted = volumes;
    const auto rank = static_cast<std::size_t>(
        std::clamp(std::ceil(options.volume_percentile * static_cast<double>(n)), 1.0, static_cast<double>(n)));
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank - 1), sorted.end());
    const double cap = sorted[rank - 1];

    constexpr std::size_t kChunk = 2048;
    parallel_for(
        (n + kChunk - 1) / kChunk,
        [&](std::size_t c) {
            const std::size_t end = std::min(n, (c + 1) * kChunk);
            for (std::size_t i = c * kChunk; i < end; ++i) {
                const Gaussian& g = cloud[i];
                double hits = 0.0;
                if (cameras.empty()) {
                    hits = 1.0;
                } else {
                    for (const auto& cam : cameras) {
                        hits += counts_as_hit(g, cam, options.near_plane) ? 1.0 : 0.0;
                    }
                }
                scores[i] = hits * g.opacity * std::pow(std::min(volumes[i], cap), options.beta);
            }
        },
        options.threads);
    return scores;
}

std::size_t keep_count(std::size_t count, double rate) {
    if (!(rate > 0.0 && rate <= 1.0)) {
        throw InvalidParameter(fmt::format("compression rate must be in (0,1], got {}", rate));
    }
    const double x = rate * static_cast<double>(count);
    const double k = std::ceil(x - 1e-9 * std::max(1.0, x));
    return std::min(count, static_cast<std::size_t>(std::max(0.0, k)));
}

std::vector<std::uint32_t> select_top(const std::vector<double>& scores, double rate) {
    const std::size_t keep = keep_count(scores.size(), rate);
    std::vector<std::uint32_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0u);
    auto better = [&](std::uint32_t a, std::uint32_t b) { return scores[a] > scores[b] || (scores[a] == scores[b] && a < b); };
    if (keep < idx.size()) {
        std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep), idx.end(), better);
        idx.resize(keep);
    }
    std::sort(idx.begin(), idx.end());
    return idx;
}

GaussianCloud compress_with_scores(const GaussianCloud& cloud, const std::vector<double>& scores, double rate,
                                   int sh_degree) {
    if (sh_degree < 0 || sh_degree > kMaxShDegree) {
        throw InvalidParameter(fmt::format("sh_degree must be in 0..3, got {}", sh_degree));
    }
    if (scores.size() != cloud.size()) {
        throw InvalidParameter("score count differs from the cloud size");
    }
    GaussianCloud out;
    out.sh_degree = std::min(sh_degree, cloud.sh_degree);
    const auto keep = select_top(scores, rate);
    out.gaussians.reserve(keep.size());
    for (std::uint32_t i : keep) {
        out.gaussians.push_back(cloud[i]);
        truncate_sh(out.gaussians.back().sh, out.sh_degree);
    }
    return out;
}

GaussianCloud compress(const GaussianCloud& cloud, double rate, int sh_degree, const std::vector<CameraView>& cameras) {
    keep_count(cloud.size(), rate);
    return compress_with_scores(cloud, significance_scores(cloud, cameras), rate, sh_degree);
}

} // namespace citysplat::lod
