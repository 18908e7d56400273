#pragma once

#include "citysplat/io/config.hpp"
#include "citysplat/partition/assignment.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace citysplat::partition {

struct Hyperparameters {
    double pos_lr_scale = 0.4;
    double scale_lr_scale = 0.8;
    int iterations = 30000;
};

struct ManifestAssignment {
    std::uint32_t image_id = 0;
    Provenance rule = kNone;
    double l_ssim = 0.0; ///< NaN when not computed
};

/// Training manifest of one block, written as blocks/block_<j>.json:
/// {block_id, bounds_contracted, bounds_world, assignment_bounds,
///  gaussian_indices, image_ids, assignments, hyperparameters}
struct BlockManifest {
    std::size_t block_id = 0;
    Bounds3 bounds_contracted;
    std::optional<Bounds3> bounds_world; ///< box of the member positions; absent for empty blocks
    Bounds3 assignment_bounds;
    std::vector<std::uint32_t> gaussian_indices;
    std::vector<std::uint32_t> image_ids;
    std::vector<ManifestAssignment> assignments;
    Hyperparameters hyperparameters;
};

std::string manifest_to_json(const BlockManifest& m);
BlockManifest manifest_from_json(const std::string& text);

std::vector<BlockManifest> build_manifests(const BlockGrid& grid, const AssignmentMatrix& assignment,
                                           const std::vector<std::uint32_t>& image_ids, const GaussianCloud& cloud,
                                           const io::RunConfig& config);

/// Writes grid.json and blocks/block_<j>.json under out_dir.
void export_manifests(const BlockGrid& grid, const AssignmentMatrix& assignment,
                      const std::vector<std::uint32_t>& image_ids, const GaussianCloud& cloud,
                      const io::RunConfig& config, const std::filesystem::path& out_dir);

/// grid.json: {p_min, p_max, dims, bounds, counts, image_ids}. Membership is
/// not stored; the loaded grid has geometry and counts only.
std::string grid_to_json(const BlockGrid& grid, const std::vector<std::uint32_t>& image_ids);
BlockGrid grid_from_json(const std::string& text, std::vector<std::uint32_t>* image_ids = nullptr);
void save_grid(const BlockGrid& grid, const std::vector<std::uint32_t>& image_ids, const std::filesystem::path& path);
BlockGrid load_grid(const std::filesystem::path& path, std::vector<std::uint32_t>* image_ids = nullptr);

struct ImportedPartition {
    BlockGrid grid; ///< geometry, counts and membership rebuilt from the manifests
    std::vector<std::uint32_t> image_ids;
    AssignmentMatrix assignment; ///< b1/b2, losses and assignment bounds; pose order of image_ids
    std::vector<BlockManifest> manifests;
};

/// Reads a directory written by export_manifests. Throws SchemaError on
/// missing fields and DataError if the manifests do not partition the
/// Gaussian indices.
ImportedPartition import_manifests(const std::filesystem::path& dir);

} // namespace citysplat::partition
