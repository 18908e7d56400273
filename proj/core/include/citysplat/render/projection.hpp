#pragma once

#include "citysplat/core/types.hpp"

#include <cstdint>
#include <optional>

namespace citysplat::render {

struct RenderSettings {
    Eigen::Vector3f background = Eigen::Vector3f::Zero();
    int sh_degree = kMaxShDegree;
    int tile_size = 16;
    double alpha_floor = 1.0 / 255.0;
    double transmittance_floor = 1e-4;
    double near_plane = 0.01;
    double low_pass = 0.3; ///< px^2 added to the cov2d diagonal
    unsigned threads = 0;  ///< 0: default_thread_count()

    /// Throws InvalidParameter for tile_size < 8, floors outside (0,1),
    /// sh_degree outside 0..3 or a non-positive near plane.
    void validate() const;
};

/// A Gaussian after projection into one camera.
struct SplatPrimitive {
    Eigen::Vector2d mean2d = Eigen::Vector2d::Zero();
    Eigen::Matrix2d cov2d = Eigen::Matrix2d::Identity();
    Eigen::Vector3d conic = Eigen::Vector3d::Zero(); ///< cov2d^-1 as (xx, xy, yy)
    double depth = 0.0;
    Eigen::Vector3f color = Eigen::Vector3f::Zero();
    double opacity = 0.0;
    std::uint32_t source_index = 0;
    Eigen::Vector2d extent = Eigen::Vector2d::Zero(); ///< screen half-widths of the footprint
};

enum class ProjectStatus { Visible, BehindNearPlane, OffScreen, Transparent, Singular };

/// Projects `g` into `cam`. The footprint half-width per axis is
/// k * sqrt(cov2d(a,a)) with k = max(3, sqrt(2 ln(opacity / alpha_floor))),
/// the radius beyond which no pixel can receive alpha >= alpha_floor.
/// Gaussians with opacity below alpha_floor are Transparent; a cov2d
/// determinant <= 1e-12 is Singular.
ProjectStatus project_gaussian(const Gaussian& g, const CameraView& cam, const RenderSettings& settings,
                               int sh_degree, std::uint32_t source_index, SplatPrimitive& out);

/// Convenience form returning nothing unless the status is Visible.
std::optional<SplatPrimitive> project_gaussian(const Gaussian& g, const CameraView& cam,
                                               const RenderSettings& settings = {});

/// 2x3 perspective Jacobian at camera-space point t, with the x/y tangents
/// clamped to 1.3 times the half field of view.
Eigen::Matrix<double, 2, 3> projection_jacobian(const Eigen::Vector3d& t, const CameraView& cam);

} // namespace citysplat::render
