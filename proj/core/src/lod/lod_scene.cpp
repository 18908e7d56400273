#include "citysplat/lod/lod_scene.hpp"

#include "citysplat/core/errors.hpp"
#include "citysplat/core/sh.hpp"
#include "citysplat/lod/bounds.hpp"
#include "citysplat/lod/compression.hpp"

#include <fmt/format.h>

#include <chrono>

namespace citysplat::lod {

std::size_t LodLevel::size() const {
    std::size_t n = 0;
    for (const auto& b : blocks) {
        n += b.size();
    }
    return n;
}

void LodScene::validate() const {
    intervals.validate();
    if (intervals.size() != levels.size()) {
        throw InvalidParameter(fmt::format("{} distance intervals for {} levels", intervals.size(), levels.size()));
    }
    for (const auto& level : levels) {
        if (level.blocks.size() != block_bounds.size()) {
            throw InvalidParameter("every level must hold the same block set");
        }
    }
    for (const auto& b : block_bounds) {
        if (b && (!b->min.allFinite() || !b->max.allFinite())) {
            throw InvalidParameter("block bounds must be finite");
        }
    }
}

LodScene build_lod_scene(const GaussianCloud& cloud, const partition::BlockGrid& grid,
                         const std::vector<CameraView>& cameras, const LodBuildOptions& options) {
    if (options.rates.empty() || options.rates.size() != options.sh_degrees.size()) {
        throw ConfigError("compression rates and SH degrees must be non-empty and of equal length");
    }
    if (grid.membership.size() != cloud.size()) {
        throw InvalidParameter("grid membership does not match the cloud");
    }
    LodScene scene;
    scene.intervals = options.intervals;
    scene.n_mad = options.n_mad;
    scene.dims = grid.dims;
    scene.map = grid.map;
    scene.source = cloud;

    const std::size_t n_blocks = grid.block_count();
    const auto members = grid.members();
    for (std::size_t j = 0; j < n_blocks; ++j) {
        if (members[j].empty()) {
            scene.block_bounds.emplace_back(std::nullopt);
            continue;
        }
        std::vector<Eigen::Vector3d> pos;
        pos.reserve(members[j].size());
        for (std::uint32_t i : members[j]) {
            pos.push_back(cloud[i].position);
        }
        scene.block_bounds.emplace_back(mad_bounds(pos, options.n_mad));
    }

    const auto scores = significance_scores(cloud, cameras);
    const std::size_t n_levels = options.rates.size();
    scene.levels.resize(n_levels);
    for (std::size_t r = 0; r < n_levels; ++r) {
        LodLevel& level = scene.levels[n_levels - 1 - r];
        level.rate = options.rates[r];
        level.sh_degree = std::min(options.sh_degrees[r], cloud.sh_degree);
        if (level.sh_degree < 0) {
            throw ConfigError(fmt::format("SH degree {} is invalid", options.sh_degrees[r]));
        }
        level.blocks.assign(n_blocks, GaussianCloud{});
        for (auto& b : level.blocks) {
            b.sh_degree = level.sh_degree;
        }
        for (std::uint32_t i : select_top(scores, level.rate)) {
            GaussianCloud& dst = level.blocks[grid.membership[i]];
            dst.gaussians.push_back(cloud[i]);
            truncate_sh(dst.gaussians.back().sh, level.sh_degree);
        }
    }
    scene.validate();
    return scene;
}

GaussianCloud RenderSet::to_cloud() const {
    GaussianCloud out;
    out.sh_degree = 0;
    for (const auto& s : segments) {
        out.sh_degree = std::max(out.sh_degree, s.sh_degree);
        out.gaussians.insert(out.gaussians.end(), s.gaussians.begin(), s.gaussians.end());
    }
    if (segments.empty()) {
        out.sh_degree = kMaxShDegree;
    }
    return out;
}

RenderSet assemble_render_set(const LodScene& scene, const CameraView& cam, const LodSelection& selection,
                              const DistanceIntervals* intervals) {
    const auto t0 = std::chrono::steady_clock::now();
    const DistanceIntervals& iv = intervals != nullptr ? *intervals : scene.intervals;
    if (iv.size() != scene.level_count() && selection.mode != LodMode::None) {
        throw InvalidParameter(fmt::format("{} intervals for {} levels", iv.size(), scene.level_count()));
    }
    RenderSet set;
    if (selection.mode == LodMode::None) {
        set.segments.push_back(render::segment_of(scene.source));
        set.total = scene.source.size();
    } else if (selection.mode == LodMode::PointWise) {
        const Eigen::Vector3d center = cam.camera_center();
        const std::size_t n_levels = scene.level_count();
        set.owned.sh_degree = 0;
        for (const auto& level : scene.levels) {
            set.owned.sh_degree = std::max(set.owned.sh_degree, level.sh_degree);
        }
        const double margin_x = 0.25 * cam.width;
        const double margin_y = 0.25 * cam.height;
        for (std::size_t j = 0; j < scene.block_count(); ++j) {
            BlockDecision d;
            d.block = j;
            for (std::size_t l = 0; l < n_levels; ++l) {
                for (const auto& g : scene.levels[l].blocks[j].gaussians) {
                    const Eigen::Vector3d t = cam.to_camera(g.position);
                    if (!(t.z() > 0.0)) {
                        continue;
                    }
                    const double u = cam.fx * t.x() / t.z() + cam.cx;
                    const double v = cam.fy * t.y() / t.z() + cam.cy;
                    if (u < -margin_x || u > cam.width + margin_x || v < -margin_y || v > cam.height + margin_y) {
                        continue;
                    }
                    if (select_level((g.position - center).norm(), iv) != l) {
                        continue;
                    }
                    set.owned.gaussians.push_back(g);
                    ++d.count;
                }
            }
            d.visible = d.count > 0;
            set.decisions.push_back(d);
        }
        set.segments.push_back(render::segment_of(set.owned));
        set.total = set.owned.size();
    } else {
        if (selection.mode == LodMode::SingleLevel && selection.level >= scene.level_count()) {
            throw InvalidParameter(fmt::format("level {} out of range", selection.level));
        }
        for (std::size_t j = 0; j < scene.block_count(); ++j) {
            BlockDecision d;
            d.block = j;
            if (scene.block_bounds[j]) {
                const BlockVisibility vis = block_visible(*scene.block_bounds[j], cam);
                d.visible = vis.visible;
                d.camera_inside = vis.camera_inside;
                d.distance = vis.min_corner_distance;
                d.screen_box = vis.screen_box;
                d.level = selection.mode == LodMode::SingleLevel ? selection.level : select_level(d.distance, iv);
                if (d.visible) {
                    const GaussianCloud& c = scene.levels[d.level].blocks[j];
                    d.count = c.size();
                    if (!c.empty()) {
                        set.segments.push_back(render::segment_of(c));
                    }
                    set.total += c.size();
                }
            }
            set.decisions.push_back(d);
        }
    }
    set.selection_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return set;
}

} // namespace citysplat::lod
