#pragma once

#include "citysplat/core/types.hpp"
#include "citysplat/render/projection.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace citysplat::render {

struct FrameStats {
    std::size_t visible = 0;          ///< splats that survived projection (and any exclusion)
    std::size_t fragments = 0;        ///< blended (splat, pixel) contributions
    std::size_t singular_skipped = 0; ///< splats dropped for a singular cov2d
    double wall_ms = 0.0;
};

/// A borrowed run of Gaussians with its stored SH degree. Several segments
/// render as their concatenation; source indices run across segments.
struct CloudSegment {
    std::span<const Gaussian> gaussians;
    int sh_degree = kMaxShDegree;
};

CloudSegment segment_of(const GaussianCloud& cloud);

/// Splats of one view, sorted by (depth, source_index) and binned to tiles.
/// Compositing the same frame repeatedly with different exclusion masks
/// gives exactly the images of the corresponding sub-clouds.
class ProjectedFrame {
public:
    ProjectedFrame(std::span<const CloudSegment> segments, const CameraView& cam, const RenderSettings& settings);
    ProjectedFrame(const GaussianCloud& cloud, const CameraView& cam, const RenderSettings& settings);

    const CameraView& camera() const { return cam_; }
    const RenderSettings& settings() const { return settings_; }
    const std::vector<SplatPrimitive>& splats() const { return splats_; }
    std::size_t source_count() const { return source_count_; }
    std::size_t singular_skipped() const { return singular_; }

    /// Alpha-composites the splats front to back over the background.
    /// `excluded`, when non-empty, has one flag per source index; flagged
    /// sources are skipped as if absent from the cloud.
    Image composite(std::span<const std::uint8_t> excluded = {}, FrameStats* stats = nullptr) const;

private:
    void build(std::span<const CloudSegment> segments);

    CameraView cam_;
    RenderSettings settings_;
    std::vector<SplatPrimitive> splats_;
    std::size_t source_count_ = 0;
    std::size_t singular_ = 0;
    int tiles_x_ = 0;
    int tiles_y_ = 0;
    std::vector<std::uint32_t> tile_offsets_; ///< tiles_x * tiles_y + 1 entries into tile_splats_
    std::vector<std::uint32_t> tile_splats_;  ///< indices into splats_, depth ordered per tile
};

Image rasterize(const GaussianCloud& cloud, const CameraView& cam, const RenderSettings& settings = {});
Image rasterize(std::span<const CloudSegment> segments, const CameraView& cam, const RenderSettings& settings = {});

struct RenderResult {
    Image image;
    FrameStats stats;
};

/// Image identical to rasterize() plus counters; wall_ms covers projection,
/// sorting, binning and compositing.
RenderResult rasterize_stats(const GaussianCloud& cloud, const CameraView& cam, const RenderSettings& settings = {});
RenderResult rasterize_stats(std::span<const CloudSegment> segments, const CameraView& cam,
                             const RenderSettings& settings = {});

} // namespace citysplat::render
