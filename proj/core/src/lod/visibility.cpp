#include "citysplat/lod/visibility.hpp"

#include "citysplat/core/errors.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace citysplat::lod {

namespace {

// Corner k has bit a set when it takes max on axis a; edges join corners
// differing in one bit.
constexpr std::array<std::array<int, 2>, 12> kEdges{{{0, 1}, {2, 3}, {4, 5}, {6, 7},
                                                     {0, 2}, {1, 3}, {4, 6}, {5, 7},
                                                     {0, 4}, {1, 5}, {2, 6}, {3, 7}}};

} // namespace

BlockVisibility block_visible(const Bounds3& bounds, const CameraView& cam, double near_plane) {
    BlockVisibility out;
    const Eigen::Vector3d center = cam.camera_center();
    const auto corners = bounds.corners();

    out.min_corner_distance = kInfinity;
    for (const auto& c : corners) {
        out.min_corner_distance = std::min(out.min_corner_distance, (c - center).norm());
    }
    if (bounds.contains_closed(center)) {
        out.camera_inside = true;
        out.visible = true;
        out.min_corner_distance = 0.0;
        out.screen_box = {0.0, 0.0, static_cast<double>(cam.width), static_cast<double>(cam.height)};
        return out;
    }

    std::array<Eigen::Vector3d, 8> cam_pts;
    for (int k = 0; k < 8; ++k) {
        cam_pts[k] = cam.to_camera(corners[k]);
    }
    std::vector<Eigen::Vector3d> front;
    for (const auto& p : cam_pts) {
        if (p.z() >= near_plane) {
            front.push_back(p);
        }
    }
    for (const auto& e : kEdges) {
        const Eigen::Vector3d& a = cam_pts[e[0]];
        const Eigen::Vector3d& b = cam_pts[e[1]];
        if ((a.z() < near_plane) != (b.z() < near_plane)) {
            const double t = (near_plane - a.z()) / (b.z() - a.z());
            Eigen::Vector3d p = a + t * (b - a);
            p.z() = near_plane;
            front.push_back(p);
        }
    }
    if (front.empty()) {
        return out;
    }
    double x0 = kInfinity;
    double y0 = kInfinity;
    double x1 = -kInfinity;
    double y1 = -kInfinity;
    for (const auto& p : front) {
        const double u = cam.fx * p.x() / p.z() + cam.cx;
        const double v = cam.fy * p.y() / p.z() + cam.cy;
        x0 = std::min(x0, u);
        x1 = std::max(x1, u);
        y0 = std::min(y0, v);
        y1 = std::max(y1, v);
    }
    const double w = cam.width;
    const double h = cam.height;
    if (x0 < w && x1 >= 0.0 && y0 < h && y1 >= 0.0) {
        out.visible = true;
        out.screen_box = {std::max(x0, 0.0), std::max(y0, 0.0), std::min(x1, w), std::min(y1, h)};
    }
    return out;
}

std::size_t select_level(double distance, const DistanceIntervals& intervals) {
    if (intervals.size() == 0) {
        throw InvalidParameter("no distance intervals");
    }
    return intervals.size() - 1 - intervals.interval_of(distance);
}

} // namespace citysplat::lod
