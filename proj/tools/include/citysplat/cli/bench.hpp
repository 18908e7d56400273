#pragma once

#include "citysplat/lod/lod_scene.hpp"
#include "citysplat/render/projection.hpp"

#include <string>
#include <vector>

namespace citysplat::cli {

/// Render modes compared by the bench.
enum class BenchMode { Lod, Finest, NoLod };

const char* bench_mode_name(BenchMode m);

struct BenchOptions {
    std::vector<double> altitudes{150.0, 300.0, 450.0};
    int per_altitude = 16;   ///< cameras per altitude
    double radius = -1.0;    ///< sweep ring radius; negative: a quarter of the foreground x extent
    double tilt_deg = 20.0;
    int width = 160;
    int height = 120;
    double hfov_deg = 60.0;
    std::vector<BenchMode> modes{BenchMode::Lod, BenchMode::Finest, BenchMode::NoLod};
    render::RenderSettings settings;
};

struct BenchFrame {
    double altitude = 0.0;
    int camera = 0;
    BenchMode mode = BenchMode::Lod;
    double render_ms = 0.0; ///< selection + rasterization, measured after all work completes
    std::size_t visible = 0;
};

struct BenchAggregate {
    double altitude = 0.0;
    BenchMode mode = BenchMode::Lod;
    double mean_fps = 0.0; ///< frames / total time
    double min_fps = 0.0;  ///< slowest frame
    double mean_ms = 0.0;
    std::size_t min_visible = 0;
    std::size_t max_visible = 0;
    double mean_visible = 0.0;
};

struct BenchReport {
    std::vector<BenchFrame> frames;
    std::vector<BenchAggregate> aggregates;

    std::string to_csv() const;
    std::string to_json() const;
};

/// Looking-down cameras on a ring over the scene centre at every altitude,
/// each rendered in every mode.
BenchReport run_bench(const lod::LodScene& scene, const BenchOptions& options);

} // namespace citysplat::cli
