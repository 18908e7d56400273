#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstddef>
#include <initializer_list>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

namespace citysplat {

/// 16 SH coefficient triples, one row per basis function, columns are RGB.
using ShCoefficients = Eigen::Matrix<float, 16, 3, Eigen::RowMajor>;

inline constexpr int kMaxShDegree = 3;

/// Number of coefficient triples used by an SH expansion of the given degree.
constexpr int sh_coefficient_count(int degree) { return (degree + 1) * (degree + 1); }

/// A single 3D Gaussian primitive in activated form: opacity in [0,1],
/// scale as positive standard deviations, rotation as a unit quaternion.
struct Gaussian {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    double opacity = 1.0;
    Eigen::Vector3d scale = Eigen::Vector3d::Ones();
    Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
    ShCoefficients sh = ShCoefficients::Zero();

    EIGEN_MAKE_ALIGNED_OPERATOR_NEW
};

/// Throws InvalidParameter if any field violates the primitive's invariants.
void validate(const Gaussian& g);

/// Ordered set of Gaussians. `sh_degree` is the highest band stored for the
/// cloud; coefficients above it are zero in memory and absent on disk.
struct GaussianCloud {
    std::vector<Gaussian> gaussians;
    int sh_degree = kMaxShDegree;

    std::size_t size() const { return gaussians.size(); }
    bool empty() const { return gaussians.empty(); }
    const Gaussian& operator[](std::size_t i) const { return gaussians[i]; }
    Gaussian& operator[](std::size_t i) { return gaussians[i]; }
};

void validate(const GaussianCloud& cloud);

/// Pinhole camera with a world-to-camera pose (x right, y down, z forward).
struct CameraView {
    int width = 0;
    int height = 0;
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    Eigen::Matrix3d rotation_w2c = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation_w2c = Eigen::Vector3d::Zero();

    /// World-space position of the optical centre, -R^T t.
    Eigen::Vector3d camera_center() const { return -rotation_w2c.transpose() * translation_w2c; }

    Eigen::Vector3d to_camera(const Eigen::Vector3d& world) const {
        return rotation_w2c * world + translation_w2c;
    }

    /// Same pose with the image and intrinsics scaled by 1/factor.
    CameraView downscaled(int factor) const;

    /// Camera at `eye` looking at `target`; `up` is the world up direction.
    static CameraView look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                              const Eigen::Vector3d& up, int width, int height,
                              double horizontal_fov_rad);

    static CameraView from_pose(int width, int height, double fx, double fy, double cx,
                                double cy, const Eigen::Quaterniond& q_w2c,
                                const Eigen::Vector3d& t_w2c);
};

void validate(const CameraView& cam);

/// RGB image with interleaved float channels in [0,1].
struct Image {
    int width = 0;
    int height = 0;
    std::vector<float> pixels;

    Image() = default;
    Image(int w, int h, const Eigen::Vector3f& fill = Eigen::Vector3f::Zero());

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
    float* at(int x, int y) { return pixels.data() + 3 * (static_cast<std::size_t>(y) * width + x); }
    const float* at(int x, int y) const {
        return pixels.data() + 3 * (static_cast<std::size_t>(y) * width + x);
    }
    Eigen::Vector3f rgb(int x, int y) const {
        const float* p = at(x, y);
        return {p[0], p[1], p[2]};
    }
};

void validate(const Image& img);

/// Axis-aligned box. In the partition module the coordinates are contracted,
/// in the lod module they are world units.
struct Bounds3 {
    Eigen::Vector3d min = Eigen::Vector3d::Zero();
    Eigen::Vector3d max = Eigen::Vector3d::Zero();

    Eigen::Vector3d center() const { return 0.5 * (min + max); }
    bool contains_closed(const Eigen::Vector3d& p) const {
        return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
    }
    bool contains_box(const Bounds3& other) const {
        return (other.min.array() >= min.array()).all() && (other.max.array() <= max.array()).all();
    }
    std::array<Eigen::Vector3d, 8> corners() const;
};

/// Contiguous ascending distance intervals [lo, hi) in metres. Interval 0 is
/// the nearest; the last one is unbounded.
struct DistanceIntervals {
    std::vector<std::pair<double, double>> ranges;

    std::size_t size() const { return ranges.size(); }

    /// Throws ConfigError unless intervals start at 0, are contiguous,
    /// non-overlapping, ascending and end at infinity.
    void validate() const;

    /// Index of the interval containing d (lower-inclusive); d must be >= 0.
    std::size_t interval_of(double d) const;

    static DistanceIntervals from_edges(std::initializer_list<double> edges);
};

/// Block counts per axis of the contracted cube. nz = 1 leaves z unpartitioned.
struct GridDims {
    int nx = 1;
    int ny = 1;
    int nz = 1;

    std::size_t block_count() const { return static_cast<std::size_t>(nx) * ny * nz; }
    int axis(int a) const { return a == 0 ? nx : (a == 1 ? ny : nz); }
    bool operator==(const GridDims&) const = default;
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

} // namespace citysplat
