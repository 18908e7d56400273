#pragma once

#include "citysplat/core/types.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace citysplat::io {

/// Warnings collected while decoding a checkpoint.
struct PlyLoadReport {
    std::size_t clamped_scales = 0;        ///< scale components raised to kMinScale
    std::size_t renormalized_rotations = 0; ///< quaternions off unit norm by more than 1e-6
};

/// Warnings collected while encoding a checkpoint.
struct PlySaveReport {
    std::size_t clamped_opacities = 0; ///< opacities clamped to [1e-6, 1-1e-6] before logit
};

inline constexpr double kMinScale = 1e-8;
inline constexpr double kOpacityClamp = 1e-6;

/// Decodes a binary little-endian Gaussian PLY. Properties are matched by
/// name, so any property order and extra properties are accepted. Raw
/// opacity goes through a sigmoid, raw scale through exp. The number of
/// f_rest_* properties (0, 9, 24 or 45) sets the cloud's SH degree.
///
/// Throws SchemaError naming a missing property, DataError with the row
/// index for non-finite values or truncated data.
GaussianCloud decode_ply(std::span<const std::uint8_t> bytes, PlyLoadReport* report = nullptr);
GaussianCloud load_ply(const std::filesystem::path& path, PlyLoadReport* report = nullptr);

/// Encodes in the canonical layout
/// x y z nx ny nz f_dc_0..2 f_rest_* opacity scale_0..2 rot_0..3 (all float32),
/// writing 3*((d+1)^2-1) f_rest properties for cloud SH degree d.
std::vector<std::uint8_t> encode_ply(const GaussianCloud& cloud, PlySaveReport* report = nullptr);
void save_ply(const GaussianCloud& cloud, const std::filesystem::path& path,
              PlySaveReport* report = nullptr);

} // namespace citysplat::io
