#include "citysplat/render/projection.hpp"

#include "citysplat/core/covariance.hpp"
#include "citysplat/core/errors.hpp"
#include "citysplat/core/sh.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace citysplat::render {

void RenderSettings::validate() const {
    if (tile_size < 8) {
        throw InvalidParameter(fmt::format("tile_size must be >= 8, got {}", tile_size));
    }
    if (!(alpha_floor > 0.0 && alpha_floor < 1.0)) {
        throw InvalidParameter(fmt::format("alpha_floor must be in (0,1), got {}", alpha_floor));
    }
    if (!(transmittance_floor >= 0.0 && transmittance_floor < 1.0)) {
        throw InvalidParameter(fmt::format("transmittance_floor must be in [0,1), got {}", transmittance_floor));
    }
    if (sh_degree < 0 || sh_degree > kMaxShDegree) {
        throw InvalidParameter(fmt::format("sh_degree must be in 0..3, got {}", sh_degree));
    }
    if (!(near_plane > 0.0)) {
        throw InvalidParameter("near_plane must be positive");
    }
    if (!(low_pass >= 0.0)) {
        throw InvalidParameter("low_pass must be non-negative");
    }
    if (!background.allFinite() || (background.array() < 0.0f).any() || (background.array() > 1.0f).any()) {
        throw InvalidParameter("background must be in [0,1]");
    }
}

Eigen::Matrix<double, 2, 3> projection_jacobian(const Eigen::Vector3d& t, const CameraView& cam) {
    const double lim_x = 1.3 * (0.5 * cam.width / cam.fx);
    const double lim_y = 1.3 * (0.5 * cam.height / cam.fy);
    const double z = t.z();
    const double tx = std::clamp(t.x() / z, -lim_x, lim_x) * z;
    const double ty = std::clamp(t.y() / z, -lim_y, lim_y) * z;
    Eigen::Matrix<double, 2, 3> j;
    j << cam.fx / z, 0.0, -cam.fx * tx / (z * z), 0.0, cam.fy / z, -cam.fy * ty / (z * z);
    return j;
}

ProjectStatus project_gaussian(const Gaussian& g, const CameraView& cam, const RenderSettings& settings,
                               int sh_degree, std::uint32_t source_index, SplatPrimitive& out) {
    const Eigen::Vector3d t = cam.to_camera(g.position);
    if (!(t.z() > settings.near_plane)) {
        return ProjectStatus::BehindNearPlane;
    }
    if (g.opacity < settings.alpha_floor) {
        return ProjectStatus::Transparent;
    }
    const double inv_z = 1.0 / t.z();
    const Eigen::Vector2d mean(cam.fx * t.x() * inv_z + cam.cx, cam.fy * t.y() * inv_z + cam.cy);

    const Eigen::Matrix3d sigma = build_covariance(g.scale, g.rotation);
    const Eigen::Matrix<double, 2, 3> jw = projection_jacobian(t, cam) * cam.rotation_w2c;
    Eigen::Matrix2d cov = jw * sigma * jw.transpose();
    cov(0, 1) = cov(1, 0) = 0.5 * (cov(0, 1) + cov(1, 0));
    cov(0, 0) += settings.low_pass;
    cov(1, 1) += settings.low_pass;
    const double det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(0, 1);
    if (!(det > 1e-12)) {
        return ProjectStatus::Singular;
    }

    const double k = std::max(3.0, std::sqrt(2.0 * std::log(g.opacity / settings.alpha_floor)));
    const Eigen::Vector2d extent(k * std::sqrt(cov(0, 0)), k * std::sqrt(cov(1, 1)));
    if (mean.x() + extent.x() < 0.0 || mean.x() - extent.x() > cam.width || mean.y() + extent.y() < 0.0 ||
        mean.y() - extent.y() > cam.height) {
        return ProjectStatus::OffScreen;
    }

    out.mean2d = mean;
    out.cov2d = cov;
    out.conic = Eigen::Vector3d(cov(1, 1) / det, -cov(0, 1) / det, cov(0, 0) / det);
    out.depth = t.z();
    out.opacity = g.opacity;
    out.source_index = source_index;
    out.extent = extent;
    const Eigen::Vector3d dir = (g.position - cam.camera_center()).normalized();
    out.color = sh_to_color(g.sh, dir, sh_degree).cast<float>();
    return ProjectStatus::Visible;
}

std::optional<SplatPrimitive> project_gaussian(const Gaussian& g, const CameraView& cam,
                                               const RenderSettings& settings) {
    SplatPrimitive s;
    if (project_gaussian(g, cam, settings, settings.sh_degree, 0, s) == ProjectStatus::Visible) {
        return s;
    }
    return std::nullopt;
}

} // namespace citysplat::render
