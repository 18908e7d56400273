#pragma once

#include "citysplat/core/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace citysplat::io {

/// One registered image of a COLMAP sparse model.
struct ColmapImage {
    std::uint32_t image_id = 0;
    std::uint32_t camera_id = 0;
    std::string name;
    CameraView view;
};

/// Reads cameras.txt/images.txt, or cameras.bin/images.bin when no text model
/// is present. Poses are world-to-camera (COLMAP convention). Only PINHOLE and
/// SIMPLE_PINHOLE cameras are supported; any other model raises DataError
/// naming the model. Result is sorted by image_id.
std::vector<ColmapImage> load_colmap(const std::filesystem::path& dir);
std::vector<ColmapImage> load_colmap_text(const std::filesystem::path& dir);
std::vector<ColmapImage> load_colmap_binary(const std::filesystem::path& dir);

/// Writes one PINHOLE camera per distinct camera_id plus all images.
/// points2D lists are written empty.
void write_colmap_text(const std::filesystem::path& dir, const std::vector<ColmapImage>& images);
void write_colmap_binary(const std::filesystem::path& dir, const std::vector<ColmapImage>& images);

} // namespace citysplat::io
