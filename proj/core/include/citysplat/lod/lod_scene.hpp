#pragma once

#include "citysplat/lod/visibility.hpp"
#include "citysplat/partition/grid.hpp"
#include "citysplat/render/rasterizer.hpp"

#include <optional>
#include <vector>

namespace citysplat::lod {

/// One detail level: a cloud per block, all blocks present (possibly empty).
struct LodLevel {
    int sh_degree = kMaxShDegree;
    double rate = 1.0;
    std::vector<GaussianCloud> blocks;

    std::size_t size() const;
};

/// Levels are ordered coarsest first; the last level is the finest.
struct LodScene {
    std::vector<LodLevel> levels;
    std::vector<std::optional<Bounds3>> block_bounds; ///< world space, empty blocks have none
    DistanceIntervals intervals;
    double n_mad = 4.0;
    GridDims dims;
    partition::ContractionMap map;
    GaussianCloud source; ///< uncompressed cloud, used when LoD is disabled

    std::size_t level_count() const { return levels.size(); }
    std::size_t block_count() const { return block_bounds.size(); }

    /// Throws InvalidParameter when interval and level counts differ, block
    /// sets differ across levels or a bound is not finite.
    void validate() const;
};

struct LodBuildOptions {
    std::vector<double> rates{0.5, 0.34, 0.25}; ///< finest level first
    std::vector<int> sh_degrees{3, 2, 1};       ///< same order as rates
    double n_mad = 4.0;
    DistanceIntervals intervals = DistanceIntervals::from_edges({200.0, 400.0});
};

/// Scores the whole cloud once, compresses it at every rate (so coarser
/// levels are subsets of finer ones) and splits each level by the grid's
/// block membership. Block bounds come from the uncompressed members.
LodScene build_lod_scene(const GaussianCloud& cloud, const partition::BlockGrid& grid,
                         const std::vector<CameraView>& cameras, const LodBuildOptions& options);

enum class LodMode {
    BlockWise,   ///< per-block level from the corner distance
    PointWise,   ///< per-Gaussian level from its own distance
    SingleLevel, ///< visible blocks at one fixed level
    None,        ///< the uncompressed source cloud
};

struct LodSelection {
    LodMode mode = LodMode::BlockWise;
    std::size_t level = 0; ///< for SingleLevel
};

struct BlockDecision {
    std::size_t block = 0;
    bool visible = false;
    bool camera_inside = false;
    std::size_t level = 0;
    double distance = 0.0;
    std::array<double, 4> screen_box{0, 0, 0, 0};
    std::size_t count = 0; ///< Gaussians contributed
};

/// Gaussians to render for one view. Segments borrow from the scene except
/// in point-wise mode, which owns a materialized cloud.
struct RenderSet {
    std::vector<render::CloudSegment> segments;
    GaussianCloud owned;
    std::vector<BlockDecision> decisions;
    std::size_t total = 0;
    double selection_ms = 0.0;

    GaussianCloud to_cloud() const;
};

/// Block-wise: for every block with bounds, block_visible decides inclusion
/// and select_level the level; the selected clouds are concatenated in block
/// order. `intervals` overrides the scene's intervals when given.
RenderSet assemble_render_set(const LodScene& scene, const CameraView& cam, const LodSelection& selection = {},
                              const DistanceIntervals* intervals = nullptr);

} // namespace citysplat::lod
