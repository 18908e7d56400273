#pragma once

#include "citysplat/io/scene_bundle.hpp"

#include <cstdint>
#include <vector>

namespace citysplat::io {

/// Parameters of the procedural city. World units are metres, z is up and the
/// city occupies [-extent/2, extent/2]^2 around the origin. A sparse ring of
/// background Gaussians lies outside the city out to 1.5 * extent.
struct SyntheticCityOptions {
    std::uint64_t seed = 7;
    double extent = 1000.0;
    int n_buildings = 24;
    int n_cameras = 64;
    std::size_t gaussian_budget = 50000; ///< upper bound on the cloud size
    int image_width = 160;
    int image_height = 120;
    double hfov_deg = 60.0;
    std::vector<double> altitudes{150.0, 300.0, 450.0};
    int test_every = 8; ///< every n-th camera goes to the test split
};

/// Deterministic for a fixed seed. Throws InvalidParameter for non-positive
/// building or camera counts, extent, budget below 1000 or empty altitudes.
/// Cameras are declared without images.
SceneBundle generate_synthetic_city(const SyntheticCityOptions& options);
SceneBundle generate_synthetic_city(std::uint64_t seed, double extent, int n_buildings, int n_cameras);

/// `count` cameras at one altitude, spread on a ring of radius `radius`
/// around `center`, each looking down with a `tilt_deg` lean toward the centre
/// (0 = straight down).
std::vector<CameraView> looking_down_sweep(const Eigen::Vector3d& center, double radius, double altitude,
                                           int count, int width, int height, double hfov_deg,
                                           double tilt_deg = 20.0);

} // namespace citysplat::io
