#pragma once

#include "citysplat/core/errors.hpp"
#include "citysplat/lod/lod_scene.hpp"
#include "citysplat/render/projection.hpp"

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace citysplat::service {

/// A client error carrying the HTTP status (400 or 413) and the offending field.
class RequestError : public Error {
public:
    RequestError(int status, std::string field, const std::string& message)
        : Error(message), status_(status), field_(std::move(field)) {}

    int status() const { return status_; }
    const std::string& field() const { return field_; }

private:
    int status_;
    std::string field_;
};

struct ServiceOptions {
    int max_width = 4096;
    int max_height = 4096;
    std::size_t max_body_bytes = 1 << 20;
    render::RenderSettings settings;
};

/// Body of POST /render:
///   {"camera": {"width","height","fx","fy","cx","cy",
///               "rotation_w2c": [[3],[3],[3]] | "qvec_w2c": [w,x,y,z],
///               "translation_w2c": [3]},
///    "lod": {"enabled": bool, "intervals": [[lo,hi|null],...],
///            "mode": "blockwise" | "pointwise"},
///    "want_overlay": bool}
struct RenderRequest {
    CameraView camera;
    bool lod_enabled = true;
    std::optional<DistanceIntervals> intervals;
    lod::LodMode mode = lod::LodMode::BlockWise;
    bool want_overlay = false;
};

/// Throws RequestError (400 naming the field, 413 for oversized images).
RenderRequest parse_render_request(const std::string& body, const ServiceOptions& options);

/// Camera fields in the request format; parse_render_request reads it back.
std::string camera_to_json(const CameraView& cam);

struct BlockStat {
    std::size_t id = 0;
    std::size_t level = 0;
    double distance = 0.0;
    std::size_t count = 0;
    bool camera_inside = false;
    std::array<double, 4> screen_box{0, 0, 0, 0};
};

struct FrameStats {
    double render_ms = 0.0;    ///< assembly + rasterization; excludes PNG encoding
    double selection_ms = 0.0;
    std::size_t visible_gaussians = 0;
    std::size_t fragments = 0;
    std::vector<BlockStat> blocks; ///< visible blocks only
    double fps_estimate = 0.0;
    bool lod_enabled = true;
};

std::string stats_to_json(const FrameStats& stats);

struct FrameResult {
    std::vector<std::uint8_t> png;
    Image image;
    FrameStats stats;
};

/// One scene, read-only; the only mutable state is the LoD interval set
/// (swapped atomically) and the stats of the last frame.
class RenderService {
public:
    RenderService(std::shared_ptr<const lod::LodScene> scene, ServiceOptions options = {});

    const ServiceOptions& options() const { return options_; }
    const lod::LodScene& scene() const { return *scene_; }

    /// {block_count, dims, level_count, level_sizes, level_sh_degrees,
    ///  intervals, n_mad, source_size, blocks:[{id, bounds|null}]}
    std::string scene_info_json() const;

    /// {blocks:[{id, min, max, corners:[8 x [x,y,z]]}]} for non-empty blocks.
    std::string blocks_json() const;

    FrameResult render_frame(const RenderRequest& request);
    FrameResult render_frame(const std::string& body) { return render_frame(parse_render_request(body, options_)); }

    /// Body {"intervals": [[lo,hi|null],...]}. Returns the acknowledgement
    /// JSON; throws RequestError(400, "intervals") when invalid.
    std::string update_lod_config(const std::string& body);
    void set_intervals(const DistanceIntervals& intervals);
    DistanceIntervals intervals() const;

    /// JSON of the most recent frame, or nothing before the first render.
    std::optional<std::string> last_stats_json() const;

private:
    std::shared_ptr<const lod::LodScene> scene_;
    ServiceOptions options_;
    mutable std::mutex mutex_;
    std::shared_ptr<const DistanceIntervals> intervals_;
    std::optional<std::string> last_stats_;
};

/// Draws each visible block's screen rectangle, coloured by level.
void draw_block_overlay(Image& image, const std::vector<BlockStat>& blocks, std::size_t level_count);

} // namespace citysplat::service
