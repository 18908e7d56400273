#pragma once

#include "citysplat/core/types.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace citysplat::io {

/// 8-bit RGB PNG; each channel is quantised as round(255 * v).
std::vector<std::uint8_t> encode_png(const Image& image);
void write_png(const std::filesystem::path& path, const Image& image);

/// Decodes any 8/16-bit gray/RGB(A) PNG into [0,1] RGB (value / 255 for
/// 8-bit input); alpha is dropped.
Image decode_png(std::span<const std::uint8_t> bytes);
Image read_png(const std::filesystem::path& path);

/// round(255 * clamp(v, 0, 1)).
std::uint8_t quantize_channel(float v);

} // namespace citysplat::io
