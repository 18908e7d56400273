#include "citysplat/io/synthetic.hpp"

#include "citysplat/core/errors.hpp"
#include "citysplat/core/sh.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace citysplat::io {

namespace {

/// Uniform and normal draws on top of mt19937_64, identical on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) {
            u1 = uniform();
        }
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
        has_spare_ = true;
        return r * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

struct Building {
    Eigen::Vector2d center;
    double width;  // along x
    double depth;  // along y
    double height;
    Eigen::Vector3d color;

    double wall_area() const { return 2.0 * (width + depth) * height; }
    double roof_area() const { return width * depth; }
};

/// Rotation whose local x, y, z axes map to t1, t2, n.
Eigen::Quaterniond frame_rotation(const Eigen::Vector3d& t1, const Eigen::Vector3d& t2, const Eigen::Vector3d& n) {
    Eigen::Matrix3d m;
    m.col(0) = t1;
    m.col(1) = t2;
    m.col(2) = n;
    Eigen::Quaterniond q(m);
    q.normalize();
    return q;
}

Eigen::Vector3d clamp01(const Eigen::Vector3d& c) { return c.cwiseMax(0.02).cwiseMin(0.98); }

void set_color(Gaussian& g, const Eigen::Vector3d& rgb, Rng& rng) {
    g.sh.setZero();
    const Eigen::Vector3f dc = rgb_to_sh_dc(clamp01(rgb).cast<float>());
    g.sh.row(0) = dc.transpose();
    for (int k = 1; k < 16; ++k) {
        const double sigma = k < 4 ? 0.03 : 0.01;
        for (int c = 0; c < 3; ++c) {
            g.sh(k, c) = static_cast<float>(sigma * rng.normal());
        }
    }
}

Gaussian make_gaussian(const Eigen::Vector3d& pos, const Eigen::Vector3d& scale, const Eigen::Quaterniond& rot,
                       double opacity, const Eigen::Vector3d& rgb, Rng& rng) {
    Gaussian g;
    g.position = pos;
    g.scale = scale;
    g.rotation = rot;
    g.opacity = opacity;
    set_color(g, rgb, rng);
    return g;
}

void add_ground(GaussianCloud& cloud, std::size_t n, double extent, Rng& rng) {
    const int side = std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(n)))));
    const double spacing = extent / side;
    const double block = extent / 8.0;
    const double road = 0.1 * block;
    for (int iy = 0; iy < side; ++iy) {
        for (int ix = 0; ix < side; ++ix) {
            const double x = -0.5 * extent + (ix + 0.5 + rng.uniform(-0.3, 0.3)) * spacing;
            const double y = -0.5 * extent + (iy + 0.5 + rng.uniform(-0.3, 0.3)) * spacing;
            const double z = 0.02 * rng.normal();
            const double mx = std::fmod(x + 0.5 * extent, block);
            const double my = std::fmod(y + 0.5 * extent, block);
            const bool on_road = mx < road || my < road;
            Eigen::Vector3d rgb = on_road ? Eigen::Vector3d(0.22, 0.22, 0.24) : Eigen::Vector3d(0.34, 0.46, 0.30);
            rgb += Eigen::Vector3d::Constant(0.04 * rng.normal());
            const double yaw = rng.uniform(0.0, 2.0 * std::numbers::pi);
            const Eigen::Quaterniond rot(Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()));
            const double s = spacing * rng.uniform(0.55, 0.7);
            cloud.gaussians.push_back(make_gaussian({x, y, z}, {s, s, 0.05 * spacing}, rot,
                                                    rng.uniform(0.85, 0.97), rgb, rng));
        }
    }
}

void add_building(GaussianCloud& cloud, const Building& b, std::size_t n, Rng& rng) {
    if (n == 0) {
        return;
    }
    const double area = b.wall_area() + b.roof_area();
    const double spacing = std::sqrt(area / static_cast<double>(n));
    const double hx = 0.5 * b.width;
    const double hy = 0.5 * b.depth;
    const Eigen::Vector3d window(0.18, 0.26, 0.42);
    for (std::size_t i = 0; i < n; ++i) {
        const double pick = rng.uniform(0.0, area);
        Eigen::Vector3d pos;
        Eigen::Vector3d t1;
        Eigen::Vector3d t2;
        Eigen::Vector3d normal;
        Eigen::Vector3d rgb = b.color;
        if (pick < b.roof_area()) {
            pos = {b.center.x() + rng.uniform(-hx, hx), b.center.y() + rng.uniform(-hy, hy), b.height};
            t1 = Eigen::Vector3d::UnitX();
            t2 = Eigen::Vector3d::UnitY();
            normal = Eigen::Vector3d::UnitZ();
            rgb *= 0.75;
        } else {
            const double w = pick - b.roof_area();
            const double side_x = b.width * b.height;
            const double side_y = b.depth * b.height;
            const double z = rng.uniform(0.0, b.height);
            double u = 0.0;
            if (w < 2.0 * side_x) {
                const double sign = w < side_x ? -1.0 : 1.0;
                u = rng.uniform(-hx, hx);
                pos = {b.center.x() + u, b.center.y() + sign * hy, z};
                t1 = Eigen::Vector3d::UnitX();
                normal = sign * Eigen::Vector3d::UnitY();
            } else {
                const double sign = w < 2.0 * side_x + side_y ? -1.0 : 1.0;
                u = rng.uniform(-hy, hy);
                pos = {b.center.x() + sign * hx, b.center.y() + u, z};
                t1 = Eigen::Vector3d::UnitY();
                normal = sign * Eigen::Vector3d::UnitX();
            }
            t2 = normal.cross(t1);
            const bool in_window = std::fmod(z, 4.0) > 1.2 && std::fmod(u + 1000.0, 5.0) < 3.0;
            if (in_window) {
                rgb = window;
            }
        }
        rgb += Eigen::Vector3d::Constant(0.03 * rng.normal());
        pos += 0.01 * spacing * Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
        const double s = spacing * rng.uniform(0.5, 0.65);
        cloud.gaussians.push_back(make_gaussian(pos, {s, s, 0.05 * spacing}, frame_rotation(t1, t2, normal),
                                                rng.uniform(0.9, 0.99), rgb, rng));
    }
}

void add_far_ring(GaussianCloud& cloud, std::size_t n, double extent, Rng& rng) {
    for (std::size_t i = 0; i < n; ++i) {
        const double r = rng.uniform(0.75 * extent, 1.5 * extent);
        const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const Eigen::Vector3d pos(r * std::cos(theta), r * std::sin(theta), rng.uniform(0.0, 40.0));
        const Eigen::Vector3d rgb(0.30 + 0.05 * rng.normal(), 0.42 + 0.05 * rng.normal(), 0.28);
        Eigen::Quaterniond q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
        q.normalize();
        const Eigen::Vector3d scale(rng.uniform(8.0, 16.0), rng.uniform(8.0, 16.0), rng.uniform(4.0, 10.0));
        cloud.gaussians.push_back(make_gaussian(pos, scale, q, rng.uniform(0.6, 0.9), rgb, rng));
    }
}

} // namespace

SceneBundle generate_synthetic_city(const SyntheticCityOptions& o) {
    if (o.n_buildings <= 0) {
        throw InvalidParameter(fmt::format("n_buildings must be positive, got {}", o.n_buildings));
    }
    if (o.n_cameras <= 0) {
        throw InvalidParameter(fmt::format("n_cameras must be positive, got {}", o.n_cameras));
    }
    if (!(o.extent > 0.0) || !std::isfinite(o.extent)) {
        throw InvalidParameter("extent must be positive and finite");
    }
    if (o.gaussian_budget < 1000) {
        throw InvalidParameter("gaussian_budget must be at least 1000");
    }
    if (o.altitudes.empty() || o.image_width <= 0 || o.image_height <= 0) {
        throw InvalidParameter("camera altitudes and image size must be non-empty");
    }

    Rng rng(o.seed);
    SceneBundle bundle;
    GaussianCloud& cloud = bundle.cloud;
    cloud.sh_degree = kMaxShDegree;
    cloud.gaussians.reserve(o.gaussian_budget);

    const auto ground_n = static_cast<std::size_t>(0.3 * static_cast<double>(o.gaussian_budget));
    const auto ring_n = static_cast<std::size_t>(0.1 * static_cast<double>(o.gaussian_budget));
    const std::size_t building_n = o.gaussian_budget - ground_n - ring_n;

    std::vector<Building> buildings;
    double total_area = 0.0;
    for (int i = 0; i < o.n_buildings; ++i) {
        Building b;
        b.center = {rng.uniform(-0.42, 0.42) * o.extent, rng.uniform(-0.42, 0.42) * o.extent};
        b.width = rng.uniform(0.03, 0.08) * o.extent;
        b.depth = rng.uniform(0.03, 0.08) * o.extent;
        b.height = rng.uniform(0.02, 0.14) * o.extent;
        b.color = {rng.uniform(0.45, 0.85), rng.uniform(0.4, 0.75), rng.uniform(0.35, 0.7)};
        total_area += b.wall_area() + b.roof_area();
        buildings.push_back(b);
    }

    add_ground(cloud, ground_n, o.extent, rng);
    for (const auto& b : buildings) {
        const double share = (b.wall_area() + b.roof_area()) / total_area;
        add_building(cloud, b, static_cast<std::size_t>(std::floor(share * static_cast<double>(building_n))), rng);
    }
    add_far_ring(cloud, ring_n, o.extent, rng);

    const double hfov = o.hfov_deg * std::numbers::pi / 180.0;
    const int n_orbit = o.n_cameras / 2;
    const int n_grid = o.n_cameras - n_orbit;
    const int grid_side = std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_grid)))));
    const Eigen::Vector3d up = Eigen::Vector3d::UnitZ();
    for (int i = 0; i < o.n_cameras; ++i) {
        const double alt = o.altitudes[static_cast<std::size_t>(i) % o.altitudes.size()];
        Eigen::Vector3d eye;
        Eigen::Vector3d target;
        if (i < n_orbit) {
            const double theta = 2.0 * std::numbers::pi * i / n_orbit + 0.1;
            const double r = 0.3 * o.extent;
            eye = {r * std::cos(theta), r * std::sin(theta), alt};
            target = {0.1 * r * std::cos(theta), 0.1 * r * std::sin(theta), 0.0};
        } else {
            const int k = i - n_orbit;
            const double gx = grid_side == 1 ? 0.0 : -0.4 + 0.8 * (k % grid_side) / (grid_side - 1);
            const double gy = grid_side == 1 ? 0.0 : -0.4 + 0.8 * (k / grid_side) / (grid_side - 1);
            eye = {gx * o.extent, gy * o.extent, alt};
            if (k % 4 == 0) {
                target = {eye.x(), eye.y(), 0.0};
            } else {
                const double heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
                target = {eye.x() + 0.35 * alt * std::cos(heading), eye.y() + 0.35 * alt * std::sin(heading), 0.0};
            }
        }
        CameraEntry e;
        e.image_id = static_cast<std::uint32_t>(i + 1);
        e.name = fmt::format("cam_{:04d}.png", i);
        e.view = CameraView::look_at(eye, target, up, o.image_width, o.image_height, hfov);
        e.image_path = std::filesystem::path("images") / e.name;
        e.image_present = false;
        e.split = (o.test_every > 0 && i % o.test_every == o.test_every - 1) ? Split::Test : Split::Train;
        bundle.cameras.push_back(std::move(e));
    }
    return bundle;
}

SceneBundle generate_synthetic_city(std::uint64_t seed, double extent, int n_buildings, int n_cameras) {
    SyntheticCityOptions o;
    o.seed = seed;
    o.extent = extent;
    o.n_buildings = n_buildings;
    o.n_cameras = n_cameras;
    return generate_synthetic_city(o);
}

std::vector<CameraView> looking_down_sweep(const Eigen::Vector3d& center, double radius, double altitude, int count,
                                           int width, int height, double hfov_deg, double tilt_deg) {
    std::vector<CameraView> out;
    const double hfov = hfov_deg * std::numbers::pi / 180.0;
    const double lean = std::tan(tilt_deg * std::numbers::pi / 180.0) * altitude;
    for (int i = 0; i < count; ++i) {
        const double theta = count > 0 ? 2.0 * std::numbers::pi * i / count : 0.0;
        const Eigen::Vector3d dir(std::cos(theta), std::sin(theta), 0.0);
        const Eigen::Vector3d eye = center + radius * dir + Eigen::Vector3d(0.0, 0.0, altitude);
        Eigen::Vector3d target = center + radius * dir - lean * dir;
        target.z() = center.z();
        out.push_back(CameraView::look_at(eye, target, Eigen::Vector3d::UnitZ(), width, height, hfov));
    }
    return out;
}

} // namespace citysplat::io
