#pragma once

#include "citysplat/core/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace citysplat::io {

enum class Split { Train, Test };

const char* split_name(Split s);
Split parse_split(const std::string& s);

struct CameraEntry {
    std::uint32_t image_id = 0;
    std::string name;
    CameraView view;
    std::filesystem::path image_path; ///< relative to the bundle root
    bool image_present = false;       ///< false: declared absent
    Split split = Split::Train;
};

/// A Gaussian cloud with its posed cameras.
///
/// On disk:
///   cloud.ply
///   sparse/0/{cameras,images}.txt
///   images/<name>          (optional per camera)
///   split.json             {"cameras":[{"image_id","split","image"}]}
/// where "image" is a relative path or null for a declared-absent image.
struct SceneBundle {
    GaussianCloud cloud;
    std::vector<CameraEntry> cameras;

    std::vector<CameraView> views(std::optional<Split> only = std::nullopt) const;
};

/// Throws InvalidParameter on duplicate image ids.
void validate(const SceneBundle& bundle);

void write_scene_bundle(const SceneBundle& bundle, const std::filesystem::path& dir);

/// Loads a bundle directory. Without split.json every camera is a training
/// camera and images are looked up as images/<name>. A camera that names an
/// image which does not exist raises DataError.
SceneBundle load_scene_bundle(const std::filesystem::path& dir);

/// Cameras of a bundle directory without its cloud. A directory holding a
/// COLMAP model directly yields training cameras without images.
std::vector<CameraEntry> load_scene_cameras(const std::filesystem::path& dir);

} // namespace citysplat::io
