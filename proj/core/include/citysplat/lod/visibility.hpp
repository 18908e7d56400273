#pragma once

#include "citysplat/core/types.hpp"

#include <array>
#include <cstddef>

namespace citysplat::lod {

struct BlockVisibility {
    bool visible = false;
    bool camera_inside = false;
    double min_corner_distance = 0.0;          ///< metres; 0 when the camera is inside
    std::array<double, 4> screen_box{0, 0, 0, 0}; ///< x0, y0, x1, y1 clipped to the image; zero when empty
};

/// Projects the part of the box in front of the near plane (its front
/// corners plus the points where box edges cross the plane) and tests the
/// projected bounding rectangle for overlap with the image [0,W) x [0,H).
/// Degenerate (flat) boxes count when they touch the image.
/// A box containing the camera centre is always visible.
BlockVisibility block_visible(const Bounds3& bounds, const CameraView& cam, double near_plane = 0.01);

/// Level for a block at `distance`: interval i of n selects level n-1-i, so
/// the nearest interval maps to the finest level.
std::size_t select_level(double distance, const DistanceIntervals& intervals);

} // namespace citysplat::lod
