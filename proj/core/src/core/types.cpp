#include "citysplat/core/types.hpp"

#include "citysplat/core/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace citysplat {

void validate(const Gaussian& g) {
    if (!g.position.allFinite()) {
        throw InvalidParameter("gaussian position is not finite");
    }
    if (!std::isfinite(g.opacity) || g.opacity < 0.0 || g.opacity > 1.0) {
        throw InvalidParameter(fmt::format("gaussian opacity {} outside [0,1]", g.opacity));
    }
    if (!g.scale.allFinite() || (g.scale.array() <= 0.0).any()) {
        throw InvalidParameter("gaussian scale must be finite and positive");
    }
    const double qn = g.rotation.coeffs().norm();
    if (!std::isfinite(qn) || std::abs(qn - 1.0) > 1e-6) {
        throw InvalidParameter(fmt::format("gaussian rotation norm {} is not 1", qn));
    }
    if (!g.sh.allFinite()) {
        throw InvalidParameter("gaussian SH coefficients are not finite");
    }
}

void validate(const GaussianCloud& cloud) {
    if (cloud.sh_degree < 0 || cloud.sh_degree > kMaxShDegree) {
        throw InvalidParameter(fmt::format("cloud sh_degree {} outside 0..3", cloud.sh_degree));
    }
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        try {
            validate(cloud[i]);
        } catch (const InvalidParameter& e) {
            throw InvalidParameter(fmt::format("gaussian {}: {}", i, e.what()));
        }
    }
}

CameraView CameraView::downscaled(int factor) const {
    if (factor <= 1) {
        return *this;
    }
    CameraView out = *this;
    out.width = std::max(1, width / factor);
    out.height = std::max(1, height / factor);
    const double sx = static_cast<double>(out.width) / width;
    const double sy = static_cast<double>(out.height) / height;
    out.fx = fx * sx;
    out.cx = cx * sx;
    out.fy = fy * sy;
    out.cy = cy * sy;
    return out;
}

CameraView CameraView::look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                               const Eigen::Vector3d& up, int width, int height,
                               double horizontal_fov_rad) {
    const Eigen::Vector3d forward = (target - eye).normalized();
    Eigen::Vector3d right = forward.cross(up);
    if (right.norm() < 1e-9) {
        // Looking along the up axis; fall back to a fixed horizontal reference.
        const Eigen::Vector3d alt = std::abs(up.y()) < 0.9 ? Eigen::Vector3d::UnitY()
                                                           : Eigen::Vector3d::UnitX();
        right = forward.cross(alt);
    }
    right.normalize();
    const Eigen::Vector3d down = forward.cross(right).normalized();

    CameraView cam;
    cam.width = width;
    cam.height = height;
    cam.fx = 0.5 * width / std::tan(0.5 * horizontal_fov_rad);
    cam.fy = cam.fx;
    cam.cx = 0.5 * width;
    cam.cy = 0.5 * height;
    cam.rotation_w2c.row(0) = right.transpose();
    cam.rotation_w2c.row(1) = down.transpose();
    cam.rotation_w2c.row(2) = forward.transpose();
    cam.translation_w2c = -cam.rotation_w2c * eye;
    return cam;
}

CameraView CameraView::from_pose(int width, int height, double fx, double fy, double cx,
                                 double cy, const Eigen::Quaterniond& q_w2c,
                                 const Eigen::Vector3d& t_w2c) {
    CameraView cam;
    cam.width = width;
    cam.height = height;
    cam.fx = fx;
    cam.fy = fy;
    cam.cx = cx;
    cam.cy = cy;
    cam.rotation_w2c = q_w2c.normalized().toRotationMatrix();
    cam.translation_w2c = t_w2c;
    return cam;
}

void validate(const CameraView& cam) {
    if (cam.width <= 0 || cam.height <= 0) {
        throw InvalidParameter(fmt::format("camera size {}x{} must be positive", cam.width, cam.height));
    }
    if (!(std::isfinite(cam.fx) && std::isfinite(cam.fy) && cam.fx > 0 && cam.fy > 0)) {
        throw InvalidParameter("camera focal lengths must be finite and positive");
    }
    if (!(std::isfinite(cam.cx) && std::isfinite(cam.cy))) {
        throw InvalidParameter("camera principal point is not finite");
    }
    if (!cam.rotation_w2c.allFinite() || !cam.translation_w2c.allFinite()) {
        throw InvalidParameter("camera pose is not finite");
    }
    const Eigen::Matrix3d rtr = cam.rotation_w2c.transpose() * cam.rotation_w2c;
    if ((rtr - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-6 ||
        cam.rotation_w2c.determinant() <= 0.0) {
        throw InvalidParameter("camera rotation is not a proper orthonormal matrix");
    }
}

Image::Image(int w, int h, const Eigen::Vector3f& fill) : width(w), height(h) {
    pixels.resize(3 * pixel_count());
    for (std::size_t i = 0; i < pixel_count(); ++i) {
        pixels[3 * i + 0] = fill.x();
        pixels[3 * i + 1] = fill.y();
        pixels[3 * i + 2] = fill.z();
    }
}

void validate(const Image& img) {
    if (img.width < 0 || img.height < 0 || img.pixels.size() != 3 * img.pixel_count()) {
        throw InvalidParameter("image buffer size does not match its dimensions");
    }
    for (float v : img.pixels) {
        if (!std::isfinite(v) || v < 0.0f || v > 1.0f) {
            throw InvalidParameter("image channel value outside [0,1]");
        }
    }
}

std::array<Eigen::Vector3d, 8> Bounds3::corners() const {
    std::array<Eigen::Vector3d, 8> out;
    for (int i = 0; i < 8; ++i) {
        out[i] = Eigen::Vector3d((i & 1) ? max.x() : min.x(), (i & 2) ? max.y() : min.y(),
                                 (i & 4) ? max.z() : min.z());
    }
    return out;
}

void DistanceIntervals::validate() const {
    if (ranges.empty()) {
        throw ConfigError("distance intervals must not be empty");
    }
    if (ranges.front().first != 0.0) {
        throw ConfigError("first distance interval must start at 0");
    }
    for (std::size_t i = 0; i < ranges.size(); ++i) {
        const auto [lo, hi] = ranges[i];
        if (std::isnan(lo) || std::isnan(hi) || !(hi > lo)) {
            throw ConfigError(fmt::format("distance interval {} is empty or not ascending", i));
        }
        if (i + 1 < ranges.size()) {
            const double next_lo = ranges[i + 1].first;
            if (next_lo < hi) {
                throw ConfigError(fmt::format("distance intervals {} and {} overlap", i, i + 1));
            }
            if (next_lo > hi) {
                throw ConfigError(fmt::format("gap between distance intervals {} and {}", i, i + 1));
            }
        }
    }
    if (!std::isinf(ranges.back().second)) {
        throw ConfigError("last distance interval must be unbounded");
    }
}

std::size_t DistanceIntervals::interval_of(double d) const {
    if (!(d >= 0.0)) {
        throw InvalidParameter(fmt::format("distance {} must be non-negative", d));
    }
    for (std::size_t i = 0; i < ranges.size(); ++i) {
        if (d >= ranges[i].first && d < ranges[i].second) {
            return i;
        }
    }
    return ranges.size() - 1;
}

DistanceIntervals DistanceIntervals::from_edges(std::initializer_list<double> edges) {
    DistanceIntervals out;
    double lo = 0.0;
    for (double e : edges) {
        if (e == 0.0 && out.ranges.empty() && lo == 0.0) {
            continue;
        }
        out.ranges.emplace_back(lo, e);
        lo = e;
    }
    out.ranges.emplace_back(lo, kInfinity);
    return out;
}

} // namespace citysplat
