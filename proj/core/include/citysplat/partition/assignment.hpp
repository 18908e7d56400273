#pragma once

#include "citysplat/partition/grid.hpp"
#include "citysplat/render/projection.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace citysplat::partition {

enum Provenance : std::uint8_t { kNone = 0, kB1 = 1, kB2 = 2, kBoth = 3 };

const char* provenance_name(Provenance p);

struct AssignmentOptions {
    double epsilon = 0.05;          ///< SSIM-loss threshold
    int downscale = 4;              ///< contribution renders use 1/downscale resolution
    std::size_t min_count = 25000;  ///< blocks with fewer Gaussians get enlarged bounds
    render::RenderSettings settings;

    void validate() const;
};

/// Pose x block assignment. Entry (i, j) is true iff b1 or b2 holds.
struct AssignmentMatrix {
    std::size_t n_poses = 0;
    std::size_t n_blocks = 0;
    std::vector<std::uint8_t> b1;          ///< contribution rule, row-major pose x block
    std::vector<std::uint8_t> b2;          ///< camera-containment rule
    std::vector<double> loss;              ///< 1 - SSIM of the contribution test (NaN if not computed)
    std::vector<Bounds3> assignment_bounds; ///< contracted bounds whose contents the contribution test removes
    std::vector<std::uint8_t> enlarged;     ///< per block: assignment bounds differ from the block bounds
    std::vector<std::string> unassignable;  ///< per pose: empty, or why the contribution test failed

    bool at(std::size_t i, std::size_t j) const { return b1[i * n_blocks + j] || b2[i * n_blocks + j]; }
    Provenance provenance(std::size_t i, std::size_t j) const {
        return static_cast<Provenance>((b1[i * n_blocks + j] ? kB1 : 0) | (b2[i * n_blocks + j] ? kB2 : 0));
    }
    /// Poses assigned to block j, ascending.
    std::vector<std::size_t> poses_of(std::size_t j) const;
};

/// Camera-containment rule: the contracted, normalized camera centre lies in
/// block j (same boundary convention as membership).
bool assign_b2(const CameraView& cam, std::size_t j, const BlockGrid& grid);

struct EnlargeResult {
    Bounds3 bounds;
    std::size_t contained = 0; ///< Gaussians inside the (closed) bounds
    int steps = 0;
    bool saturated = false;    ///< reached the full cube with fewer than min_count inside
};

/// Grows block j's bounds about their centre by 1.2x per step, clipped to
/// [-2,2], until at least min_count Gaussians lie inside or the bounds cover
/// the whole cube. Bounds already holding min_count members are returned
/// unchanged. Throws InvalidParameter for min_count == 0.
EnlargeResult enlarge_bounds(std::size_t j, const BlockGrid& grid, std::size_t min_count);

/// Flags the Gaussians removed by the contribution test for block j: its
/// members, or everything inside `bounds` when enlarged.
std::vector<std::uint8_t> removal_mask(const BlockGrid& grid, std::size_t j, const Bounds3& bounds, bool enlarged);

/// L_SSIM between the full render and the render without the removal set.
double contribution_loss(const GaussianCloud& cloud, const CameraView& cam, std::span<const std::uint8_t> removed,
                         const AssignmentOptions& options);

/// Contribution rule for one (pose, block) pair using the block's own members.
bool assign_b1(const CameraView& cam, std::size_t j, const GaussianCloud& cloud, const BlockGrid& grid,
               const AssignmentOptions& options);

/// Full matrix. Each pose is projected once; the block-removed renders reuse
/// that projection. Poses are processed concurrently.
AssignmentMatrix assign(const std::vector<CameraView>& poses, const BlockGrid& grid, const GaussianCloud& cloud,
                        const AssignmentOptions& options);

} // namespace citysplat::partition
