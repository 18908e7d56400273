#include "citysplat/partition/assignment.hpp"

#include "citysplat/core/errors.hpp"
#include "citysplat/core/parallel.hpp"
#include "citysplat/metrics/metrics.hpp"
#include "citysplat/render/rasterizer.hpp"

#include <fmt/format.h>

#include <cmath>
#include <limits>

namespace citysplat::partition {

const char* provenance_name(Provenance p) {
    switch (p) {
    case kB1:
        return "B1";
    case kB2:
        return "B2";
    case kBoth:
        return "both";
    default:
        return "none";
    }
}

void AssignmentOptions::validate() const {
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
        throw InvalidParameter(fmt::format("epsilon must be in (0,1), got {}", epsilon));
    }
    if (downscale < 1) {
        throw InvalidParameter(fmt::format("downscale must be >= 1, got {}", downscale));
    }
    if (min_count == 0) {
        throw InvalidParameter("min_count must be positive");
    }
    settings.validate();
}

std::vector<std::size_t> AssignmentMatrix::poses_of(std::size_t j) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n_poses; ++i) {
        if (at(i, j)) {
            out.push_back(i);
        }
    }
    return out;
}

bool assign_b2(const CameraView& cam, std::size_t j, const BlockGrid& grid) {
    return grid.in_block(j, contract_world(cam.camera_center(), grid.map));
}

EnlargeResult enlarge_bounds(std::size_t j, const BlockGrid& grid, std::size_t min_count) {
    if (min_count == 0) {
        throw InvalidParameter("min_count must be positive");
    }
    if (j >= grid.block_count()) {
        throw InvalidParameter(fmt::format("block {} out of range", j));
    }
    EnlargeResult r;
    r.bounds = grid.bounds[j];
    if (grid.counts[j] >= min_count) {
        r.contained = grid.counts[j];
        return r;
    }
    auto count_inside = [&](const Bounds3& b) {
        std::size_t n = 0;
        for (const auto& c : grid.contracted) {
            n += b.contains_closed(c) ? 1 : 0;
        }
        return n;
    };
    const Eigen::Vector3d center = r.bounds.center();
    Eigen::Vector3d half = 0.5 * (r.bounds.max - r.bounds.min);
    const Eigen::Vector3d cube_min = Eigen::Vector3d::Constant(-2.0);
    const Eigen::Vector3d cube_max = Eigen::Vector3d::Constant(2.0);
    r.contained = count_inside(r.bounds);
    while (r.contained < min_count) {
        if (r.bounds.min == cube_min && r.bounds.max == cube_max) {
            r.saturated = true;
            break;
        }
        half *= 1.2;
        r.bounds.min = (center - half).cwiseMax(cube_min).cwiseMin(r.bounds.min);
        r.bounds.max = (center + half).cwiseMin(cube_max).cwiseMax(r.bounds.max);
        ++r.steps;
        r.contained = count_inside(r.bounds);
    }
    return r;
}

std::vector<std::uint8_t> removal_mask(const BlockGrid& grid, std::size_t j, const Bounds3& bounds, bool enlarged) {
    std::vector<std::uint8_t> mask(grid.membership.size(), 0);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        mask[i] = enlarged ? bounds.contains_closed(grid.contracted[i]) : grid.membership[i] == j;
    }
    return mask;
}

double contribution_loss(const GaussianCloud& cloud, const CameraView& cam, std::span<const std::uint8_t> removed,
                         const AssignmentOptions& options) {
    const CameraView view = options.downscale > 1 ? cam.downscaled(options.downscale) : cam;
    const render::ProjectedFrame frame(cloud, view, options.settings);
    return metrics::l_ssim(frame.composite(), frame.composite(removed));
}

bool assign_b1(const CameraView& cam, std::size_t j, const GaussianCloud& cloud, const BlockGrid& grid,
               const AssignmentOptions& options) {
    const auto mask = removal_mask(grid, j, grid.bounds[j], false);
    return contribution_loss(cloud, cam, mask, options) > options.epsilon;
}

AssignmentMatrix assign(const std::vector<CameraView>& poses, const BlockGrid& grid, const GaussianCloud& cloud,
                        const AssignmentOptions& options) {
    options.validate();
    if (grid.membership.size() != cloud.size()) {
        throw InvalidParameter("grid membership does not match the cloud");
    }
    AssignmentMatrix m;
    m.n_poses = poses.size();
    m.n_blocks = grid.block_count();
    m.b1.assign(m.n_poses * m.n_blocks, 0);
    m.b2.assign(m.n_poses * m.n_blocks, 0);
    m.loss.assign(m.n_poses * m.n_blocks, std::numeric_limits<double>::quiet_NaN());
    m.unassignable.assign(m.n_poses, {});
    m.enlarged.assign(m.n_blocks, 0);

    std::vector<std::vector<std::uint8_t>> masks(m.n_blocks);
    for (std::size_t j = 0; j < m.n_blocks; ++j) {
        const EnlargeResult e = enlarge_bounds(j, grid, options.min_count);
        m.assignment_bounds.push_back(e.bounds);
        m.enlarged[j] = e.steps > 0;
        masks[j] = removal_mask(grid, j, e.bounds, m.enlarged[j]);
    }

    render::RenderSettings inner = options.settings;
    inner.threads = 1;
    parallel_for(
        m.n_poses,
        [&](std::size_t i) {
            for (std::size_t j = 0; j < m.n_blocks; ++j) {
                m.b2[i * m.n_blocks + j] = assign_b2(poses[i], j, grid);
            }
            try {
                const CameraView view = options.downscale > 1 ? poses[i].downscaled(options.downscale) : poses[i];
                const render::ProjectedFrame frame(cloud, view, inner);
                const Image full = frame.composite();
                std::vector<std::uint8_t> present(cloud.size(), 0);
                for (const auto& s : frame.splats()) {
                    present[s.source_index] = 1;
                }
                for (std::size_t j = 0; j < m.n_blocks; ++j) {
                    bool touches = false;
                    for (std::size_t k = 0; k < present.size() && !touches; ++k) {
                        touches = present[k] && masks[j][k];
                    }
                    const double loss = touches ? metrics::l_ssim(full, frame.composite(masks[j])) : 0.0;
                    m.loss[i * m.n_blocks + j] = loss;
                    m.b1[i * m.n_blocks + j] = loss > options.epsilon;
                }
            } catch (const Error& e) {
                m.unassignable[i] = e.what();
                for (std::size_t j = 0; j < m.n_blocks; ++j) {
                    m.b1[i * m.n_blocks + j] = 0;
                }
            }
        },
        options.settings.threads);
    return m;
}

} // namespace citysplat::partition
