#include "citysplat/cli/bench.hpp"

#include "citysplat/io/synthetic.hpp"
#include "citysplat/render/rasterizer.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <limits>

namespace citysplat::cli {

const char* bench_mode_name(BenchMode m) {
    switch (m) {
    case BenchMode::Lod:
        return "lod";
    case BenchMode::Finest:
        return "finest";
    case BenchMode::NoLod:
        return "no_lod";
    }
    return "?";
}

BenchReport run_bench(const lod::LodScene& scene, const BenchOptions& o) {
    BenchReport report;
    const Eigen::Vector3d fg_min = scene.map.p_min;
    const Eigen::Vector3d fg_max = scene.map.p_max;
    const Eigen::Vector3d center(0.5 * (fg_min.x() + fg_max.x()), 0.5 * (fg_min.y() + fg_max.y()), fg_min.z());
    const double radius = o.radius >= 0.0 ? o.radius : 0.25 * (fg_max.x() - fg_min.x());

    for (double altitude : o.altitudes) {
        const auto cams =
            io::looking_down_sweep(center, radius, altitude, o.per_altitude, o.width, o.height, o.hfov_deg, o.tilt_deg);
        for (BenchMode mode : o.modes) {
            lod::LodSelection sel;
            if (mode == BenchMode::NoLod) {
                sel.mode = lod::LodMode::None;
            } else if (mode == BenchMode::Finest) {
                sel.mode = lod::LodMode::SingleLevel;
                sel.level = scene.level_count() - 1;
            }
            BenchAggregate agg;
            agg.altitude = altitude;
            agg.mode = mode;
            agg.min_visible = std::numeric_limits<std::size_t>::max();
            double total_ms = 0.0;
            double worst_ms = 0.0;
            for (std::size_t i = 0; i < cams.size(); ++i) {
                const auto t0 = std::chrono::steady_clock::now();
                const lod::RenderSet set = lod::assemble_render_set(scene, cams[i], sel);
                const render::RenderResult rr = render::rasterize_stats(set.segments, cams[i], o.settings);
                const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
                report.frames.push_back({altitude, static_cast<int>(i), mode, ms, rr.stats.visible});
                total_ms += ms;
                worst_ms = std::max(worst_ms, ms);
                agg.min_visible = std::min(agg.min_visible, rr.stats.visible);
                agg.max_visible = std::max(agg.max_visible, rr.stats.visible);
                agg.mean_visible += static_cast<double>(rr.stats.visible);
            }
            if (cams.empty()) {
                agg.min_visible = 0;
            } else {
                const double n = static_cast<double>(cams.size());
                agg.mean_ms = total_ms / n;
                agg.mean_fps = total_ms > 0.0 ? 1000.0 * n / total_ms : 0.0;
                agg.min_fps = worst_ms > 0.0 ? 1000.0 / worst_ms : 0.0;
                agg.mean_visible /= n;
            }
            report.aggregates.push_back(agg);
        }
    }
    return report;
}

std::string BenchReport::to_csv() const {
    std::string out = "altitude,camera,mode,render_ms,visible\n";
    for (const auto& f : frames) {
        out += fmt::format("{},{},{},{:.4f},{}\n", f.altitude, f.camera, bench_mode_name(f.mode), f.render_ms, f.visible);
    }
    out += "\naltitude,mode,mean_fps,min_fps,mean_ms,mean_visible,min_visible,max_visible\n";
    for (const auto& a : aggregates) {
        out += fmt::format("{},{},{:.3f},{:.3f},{:.4f},{:.1f},{},{}\n", a.altitude, bench_mode_name(a.mode), a.mean_fps,
                           a.min_fps, a.mean_ms, a.mean_visible, a.min_visible, a.max_visible);
    }
    return out;
}

std::string BenchReport::to_json() const {
    nlohmann::json fr = nlohmann::json::array();
    for (const auto& f : frames) {
        fr.push_back({{"altitude", f.altitude},
                      {"camera", f.camera},
                      {"mode", bench_mode_name(f.mode)},
                      {"render_ms", f.render_ms},
                      {"visible", f.visible}});
    }
    nlohmann::json ag = nlohmann::json::array();
    for (const auto& a : aggregates) {
        ag.push_back({{"altitude", a.altitude},
                      {"mode", bench_mode_name(a.mode)},
                      {"mean_fps", a.mean_fps},
                      {"min_fps", a.min_fps},
                      {"mean_ms", a.mean_ms},
                      {"mean_visible", a.mean_visible},
                      {"min_visible", a.min_visible},
                      {"max_visible", a.max_visible}});
    }
    return nlohmann::json{{"frames", fr}, {"aggregates", ag}}.dump(2) + "\n";
}

} // namespace citysplat::cli
