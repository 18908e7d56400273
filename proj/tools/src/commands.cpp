#include "citysplat/cli/commands.hpp"

#include "citysplat/cli/bench.hpp"
#include "citysplat/core/errors.hpp"
#include "citysplat/io/atomic_file.hpp"
#include "citysplat/io/config.hpp"
#include "citysplat/io/ply.hpp"
#include "citysplat/io/png.hpp"
#include "citysplat/io/scene_bundle.hpp"
#include "citysplat/io/synthetic.hpp"
#include "citysplat/lod/bundle.hpp"
#include "citysplat/metrics/metrics.hpp"
#include "citysplat/partition/assignment.hpp"
#include "citysplat/partition/fusion.hpp"
#include "citysplat/partition/manifest.hpp"
#include "citysplat/render/rasterizer.hpp"
#include "citysplat/service/http_server.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include <filesystem>
#include <future>
#include <regex>

namespace citysplat::cli {

namespace fs = std::filesystem;

namespace {

GridDims parse_dims(const std::string& s) {
    static const std::regex re(R"(^\s*(\d+)\s*[xX,]\s*(\d+)\s*(?:[xX,]\s*(\d+))?\s*$)");
    std::smatch m;
    if (!std::regex_match(s, m, re)) {
        throw ConfigError(fmt::format("block dims '{}' must look like 6x6 or 2x2x1", s));
    }
    GridDims d{std::stoi(m[1]), std::stoi(m[2]), m[3].matched ? std::stoi(m[3]) : 1};
    if (d.nx < 1 || d.ny < 1 || d.nz < 1) {
        throw ConfigError(fmt::format("block dims '{}' must be positive", s));
    }
    return d;
}

io::RunConfig load_run_config(const std::string& config_path, const std::string& dataset) {
    io::RunConfig cfg = config_path.empty() ? io::RunConfig{} : io::load_config(config_path);
    if (!dataset.empty()) {
        if (!config_path.empty()) {
            throw ConfigError("--dataset and --config are mutually exclusive; set 'dataset' in the config file");
        }
        cfg = io::dataset_preset(dataset);
    }
    cfg.validate();
    return cfg;
}

std::vector<io::CameraEntry> cameras_for(const std::string& dir, const std::string& split) {
    auto all = io::load_scene_cameras(dir);
    if (split == "all") {
        return all;
    }
    const io::Split want = io::parse_split(split);
    std::vector<io::CameraEntry> out;
    for (auto& c : all) {
        if (c.split == want) {
            out.push_back(std::move(c));
        }
    }
    return out;
}

std::vector<CameraView> views_of(const std::vector<io::CameraEntry>& entries) {
    std::vector<CameraView> out;
    for (const auto& e : entries) {
        out.push_back(e.view);
    }
    return out;
}

Eigen::Vector3f parse_background(const std::vector<double>& v) {
    if (v.empty()) {
        return Eigen::Vector3f::Zero();
    }
    if (v.size() != 3) {
        throw ConfigError("--background needs three values r,g,b");
    }
    return Eigen::Vector3d(v[0], v[1], v[2]).cast<float>();
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
    std::string out;
    io::SyntheticCityOptions city;
    bool no_images = false;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
    io::SceneBundle bundle = io::generate_synthetic_city(a.city);
    bundle.cloud = io::decode_ply(io::encode_ply(bundle.cloud));
    fs::create_directories(fs::path(a.out) / "images");
    if (!a.no_images) {
        for (auto& c : bundle.cameras) {
            io::write_png(fs::path(a.out) / c.image_path, render::rasterize(bundle.cloud, c.view));
            c.image_present = true;
        }
    }
    io::write_scene_bundle(bundle, a.out);
    fmt::print(out, "synthetic city: {} Gaussians, {} cameras -> {}\n", bundle.cloud.size(), bundle.cameras.size(),
               a.out);
    return kExitOk;
}

// ---------------------------------------------------------------- partition

struct PartitionArgs {
    std::string config;
    std::string dataset;
    std::string ply;
    std::string cameras;
    std::string out;
    std::string dims;
    double epsilon = -1.0;
    long long min_count = -1;
    int downscale = -1;
};

int cmd_partition(const PartitionArgs& a, std::ostream& out) {
    io::RunConfig cfg = load_run_config(a.config, a.dataset);
    if (!a.dims.empty()) {
        cfg.block_dims = parse_dims(a.dims);
    }
    if (a.epsilon >= 0.0) {
        cfg.ssim_threshold = a.epsilon;
    }
    if (a.min_count >= 0) {
        cfg.min_block_count = static_cast<std::size_t>(a.min_count);
    }
    if (a.downscale >= 0) {
        cfg.assignment_downscale = a.downscale;
    }
    cfg.validate();

    const GaussianCloud cloud = io::load_ply(a.ply);
    const auto entries = cameras_for(a.cameras, "train");
    const auto views = views_of(entries);
    std::vector<std::uint32_t> ids;
    for (const auto& e : entries) {
        ids.push_back(e.image_id);
    }

    const partition::ContractionMap map = partition::foreground_map(cloud, cfg);
    const partition::BlockGrid grid = partition::grid_partition(cloud, map, cfg.block_dims);
    partition::AssignmentOptions opts;
    opts.epsilon = cfg.ssim_threshold;
    opts.downscale = cfg.assignment_downscale;
    opts.min_count = cfg.min_block_count;
    opts.settings.background = cfg.background;
    const partition::AssignmentMatrix m = partition::assign(views, grid, cloud, opts);

    const fs::path dir(a.out);
    partition::export_manifests(grid, m, ids, cloud, cfg, dir);
    const auto slices = partition::split_by_block(cloud, grid);
    for (std::size_t j = 0; j < slices.size(); ++j) {
        io::save_ply(slices[j], dir / "blocks" / fmt::format("block_{}.ply", j));
    }
    io::write_file_atomic(dir / "config.json", io::dump_config(cfg));

    fmt::print(out, "{} Gaussians in {} blocks ({}x{}x{}), {} poses\n", cloud.size(), grid.block_count(),
               grid.dims.nx, grid.dims.ny, grid.dims.nz, views.size());
    for (std::size_t j = 0; j < grid.block_count(); ++j) {
        std::size_t n_b1 = 0;
        std::size_t n_b2 = 0;
        std::size_t n = 0;
        for (std::size_t i = 0; i < m.n_poses; ++i) {
            n_b1 += m.b1[i * m.n_blocks + j];
            n_b2 += m.b2[i * m.n_blocks + j];
            n += m.at(i, j) ? 1 : 0;
        }
        fmt::print(out, "block {:>3}: {:>8} Gaussians, {:>4} poses (B1 {}, B2 {}){}\n", j, grid.counts[j], n, n_b1,
                   n_b2, m.enlarged[j] ? ", enlarged bounds" : "");
    }
    for (std::size_t i = 0; i < m.n_poses; ++i) {
        if (!m.unassignable[i].empty()) {
            fmt::print(out, "warning: image {} unassignable: {}\n", ids[i], m.unassignable[i]);
        }
    }
    return kExitOk;
}

// ---------------------------------------------------------------- fuse

struct FuseArgs {
    std::string grid;
    std::string out;
    std::vector<std::string> inputs;
};

int cmd_fuse(const FuseArgs& a, std::ostream& out) {
    const partition::BlockGrid grid = partition::load_grid(a.grid);
    static const std::regex named(R"(block_(\d+)\.ply$)");
    std::vector<partition::BlockCloud> clouds;
    for (const auto& in : a.inputs) {
        std::size_t block = 0;
        std::string path = in;
        const auto eq = in.find('=');
        std::smatch m;
        if (eq != std::string::npos) {
            block = static_cast<std::size_t>(std::stoul(in.substr(0, eq)));
            path = in.substr(eq + 1);
        } else if (const std::string name = fs::path(in).filename().string(); std::regex_search(name, m, named)) {
            block = static_cast<std::size_t>(std::stoul(m[1]));
        } else {
            throw ConfigError(fmt::format("cannot tell the block of '{}'; use J=path or name it block_J.ply", in));
        }
        clouds.push_back({io::load_ply(path), block});
    }
    const GaussianCloud fused = partition::fuse(clouds, grid);
    io::save_ply(fused, a.out);
    std::size_t total = 0;
    for (const auto& c : clouds) {
        total += c.cloud.size();
    }
    fmt::print(out, "fused {} of {} Gaussians from {} block clouds -> {}\n", fused.size(), total, clouds.size(), a.out);
    return kExitOk;
}

// ---------------------------------------------------------------- compress

struct CompressArgs {
    std::string config;
    std::string dataset;
    std::string ply;
    std::string cameras;
    std::string out;
    std::string grid;
    std::string dims;
    std::vector<double> rates;
    std::vector<int> sh_degrees;
    std::string intervals;
    double n_mad = -1.0;
};

int cmd_compress(const CompressArgs& a, std::ostream& out) {
    io::RunConfig cfg = load_run_config(a.config, a.dataset);
    if (!a.rates.empty()) {
        cfg.compression_rates = a.rates;
        if (a.sh_degrees.empty()) {
            cfg.lod_sh_degrees.assign(a.rates.size(), kMaxShDegree);
        }
    }
    if (!a.sh_degrees.empty()) {
        cfg.lod_sh_degrees = a.sh_degrees;
    }
    if (!a.intervals.empty()) {
        cfg.distance_intervals = io::parse_intervals(a.intervals);
    } else if (cfg.distance_intervals.size() != cfg.compression_rates.size()) {
        throw ConfigError(fmt::format("{} compression rates need as many distance intervals (--intervals)",
                                      cfg.compression_rates.size()));
    }
    if (a.n_mad >= 0.0) {
        cfg.n_mad = a.n_mad;
    }
    if (!a.dims.empty()) {
        cfg.block_dims = parse_dims(a.dims);
    }
    cfg.validate();

    const GaussianCloud cloud = io::load_ply(a.ply);
    const auto views = a.cameras.empty() ? std::vector<CameraView>{} : views_of(cameras_for(a.cameras, "train"));
    partition::BlockGrid grid;
    if (!a.grid.empty()) {
        const partition::BlockGrid g = partition::load_grid(a.grid);
        grid = partition::grid_partition(cloud, g.map, g.dims);
    } else {
        grid = partition::grid_partition(cloud, partition::foreground_map(cloud, cfg), cfg.block_dims);
    }
    lod::LodBuildOptions opts;
    opts.rates = cfg.compression_rates;
    opts.sh_degrees = cfg.lod_sh_degrees;
    opts.n_mad = cfg.n_mad;
    opts.intervals = cfg.distance_intervals;
    const lod::LodScene scene = lod::build_lod_scene(cloud, grid, views, opts);
    lod::save_lod_bundle(scene, a.out);

    fmt::print(out, "LoD bundle with {} levels over {} blocks -> {}\n", scene.level_count(), scene.block_count(), a.out);
    for (std::size_t l = 0; l < scene.level_count(); ++l) {
        fmt::print(out, "level {}: rate {}, SH degree {}, {} Gaussians\n", l, scene.levels[l].rate,
                   scene.levels[l].sh_degree, scene.levels[l].size());
    }
    return kExitOk;
}

// ---------------------------------------------------------------- render

struct RenderArgs {
    std::string scene;
    std::string cameras;
    std::string out;
    std::string split = "test";
    std::string lod_mode = "blockwise";
    bool no_lod = false;
    std::vector<double> background;
};

int cmd_render(const RenderArgs& a, std::ostream& out) {
    const fs::path scene_path(a.scene);
    std::shared_ptr<lod::LodScene> scene;
    GaussianCloud plain;
    bool have_bundle = false;
    if (fs::is_directory(scene_path) && fs::exists(scene_path / "index.json")) {
        scene = std::make_shared<lod::LodScene>(lod::load_lod_bundle(scene_path));
        have_bundle = true;
    } else if (fs::is_directory(scene_path)) {
        plain = io::load_ply(scene_path / "cloud.ply");
    } else {
        plain = io::load_ply(scene_path);
    }

    lod::LodSelection sel;
    if (a.lod_mode == "pointwise") {
        sel.mode = lod::LodMode::PointWise;
    } else if (a.lod_mode != "blockwise") {
        throw ConfigError(fmt::format("--lod-mode must be blockwise or pointwise, got '{}'", a.lod_mode));
    }
    if (a.no_lod) {
        sel.mode = lod::LodMode::None;
    }

    render::RenderSettings settings;
    settings.background = parse_background(a.background);
    const auto entries = cameras_for(a.cameras, a.split);
    const fs::path dir(a.out);
    fs::create_directories(dir / "images");

    std::vector<metrics::MetricRow> rows;
    nlohmann::json frames = nlohmann::json::array();
    for (const auto& e : entries) {
        render::RenderResult rr;
        std::size_t selected = 0;
        if (have_bundle) {
            const lod::RenderSet set = lod::assemble_render_set(*scene, e.view, sel);
            selected = set.total;
            rr = render::rasterize_stats(set.segments, e.view, settings);
        } else {
            selected = plain.size();
            rr = render::rasterize_stats(plain, e.view, settings);
        }
        io::write_png(dir / "images" / e.name, rr.image);
        frames.push_back({{"image_id", e.image_id},
                          {"name", e.name},
                          {"selected_gaussians", selected},
                          {"visible_gaussians", rr.stats.visible},
                          {"render_ms", rr.stats.wall_ms}});
        if (e.image_present) {
            const Image gt = io::read_png(fs::path(a.cameras) / e.image_path);
            const Image written = io::decode_png(io::encode_png(rr.image));
            rows.push_back({e.image_id, metrics::evaluate(written, gt)});
        }
    }
    io::write_file_atomic(dir / "frames.json", frames.dump(2) + "\n");
    if (!rows.empty()) {
        io::write_file_atomic(dir / "metrics.json", metrics::metrics_json(rows));
        double psnr = 0.0;
        double ssim = 0.0;
        std::size_t finite = 0;
        for (const auto& r : rows) {
            ssim += r.report.ssim;
            if (!r.report.psnr_infinite) {
                psnr += r.report.psnr;
                ++finite;
            }
        }
        fmt::print(out, "{} images, mean SSIM {:.4f}, mean PSNR {:.2f} dB over {} finite\n", rows.size(),
                   ssim / static_cast<double>(rows.size()), finite ? psnr / static_cast<double>(finite) : 0.0, finite);
    } else {
        fmt::print(out, "{} images rendered (no ground truth)\n", entries.size());
    }
    return kExitOk;
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
    std::string bundle;
    std::string out;
    BenchOptions options;
};

int cmd_bench(const BenchArgs& a, std::ostream& out) {
    const lod::LodScene scene = lod::load_lod_bundle(a.bundle);
    const BenchReport report = run_bench(scene, a.options);
    const fs::path dir(a.out);
    fs::create_directories(dir);
    io::write_file_atomic(dir / "bench.csv", report.to_csv());
    io::write_file_atomic(dir / "bench.json", report.to_json());
    fmt::print(out, "{:>9} {:>8} {:>10} {:>10} {:>12} {:>12}\n", "altitude", "mode", "mean_fps", "min_fps",
               "mean_visible", "min_visible");
    for (const auto& g : report.aggregates) {
        fmt::print(out, "{:>9.1f} {:>8} {:>10.2f} {:>10.2f} {:>12.1f} {:>12}\n", g.altitude, bench_mode_name(g.mode),
                   g.mean_fps, g.min_fps, g.mean_visible, g.min_visible);
    }
    return kExitOk;
}

// ---------------------------------------------------------------- serve

struct ServeArgs {
    std::string bundle;
    std::string bind;
    int max_width = 4096;
    int max_height = 4096;
};

int cmd_serve(const ServeArgs& a, std::ostream& out) {
    auto scene = std::make_shared<const lod::LodScene>(lod::load_lod_bundle(a.bundle));
    service::ServiceOptions opts;
    opts.max_width = a.max_width;
    opts.max_height = a.max_height;
    service::RenderService svc(scene, opts);
    const service::BindAddress addr = service::resolve_bind(a.bind);
    service::HttpServer server(svc, addr);
    const int port = server.start();
    fmt::print(out, "serving {} on http://{}:{}\n", a.bundle, addr.host, port);
    out.flush();
    std::promise<void>().get_future().wait();
    return kExitOk;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"citysplat: partition, fuse, compress, render and benchmark large Gaussian scenes"};
    app.require_subcommand(1);

    SynthArgs synth;
    auto* s_synth = app.add_subcommand("synth", "Generate a procedural city scene bundle");
    s_synth->add_option("--out", synth.out, "Output directory")->required();
    s_synth->add_option("--seed", synth.city.seed, "Random seed");
    s_synth->add_option("--extent", synth.city.extent, "City size in metres");
    s_synth->add_option("--buildings", synth.city.n_buildings, "Number of buildings");
    s_synth->add_option("--cameras", synth.city.n_cameras, "Number of cameras");
    s_synth->add_option("--budget", synth.city.gaussian_budget, "Maximum Gaussian count");
    s_synth->add_option("--width", synth.city.image_width, "Image width");
    s_synth->add_option("--height", synth.city.image_height, "Image height");
    s_synth->add_flag("--no-images", synth.no_images, "Skip ground-truth renders");

    PartitionArgs part;
    auto* s_part = app.add_subcommand("partition", "Divide a cloud into blocks and assign training images");
    s_part->add_option("--config", part.config, "Run configuration (JSON)");
    s_part->add_option("--dataset", part.dataset, "Preset: matrixcity, rubble, building, residence, sciart");
    s_part->add_option("--ply", part.ply, "Input Gaussian PLY")->required();
    s_part->add_option("--cameras", part.cameras, "Scene bundle or COLMAP model directory")->required();
    s_part->add_option("--out", part.out, "Output directory")->required();
    s_part->add_option("--dims", part.dims, "Block grid, e.g. 6x6");
    s_part->add_option("--epsilon", part.epsilon, "SSIM-loss threshold");
    s_part->add_option("--min-count", part.min_count, "Gaussian count below which block bounds are enlarged");
    s_part->add_option("--downscale", part.downscale, "Resolution divisor for contribution renders");

    FuseArgs fuse;
    auto* s_fuse = app.add_subcommand("fuse", "Concatenate block clouds, each filtered to its block");
    s_fuse->add_option("--grid", fuse.grid, "grid.json written by partition")->required();
    s_fuse->add_option("--out", fuse.out, "Output PLY")->required();
    s_fuse->add_option("inputs", fuse.inputs, "Block clouds as J=path or block_J.ply")->required();

    CompressArgs comp;
    auto* s_comp = app.add_subcommand("compress", "Build a level-of-detail bundle");
    s_comp->add_option("--config", comp.config, "Run configuration (JSON)");
    s_comp->add_option("--dataset", comp.dataset, "Dataset preset");
    s_comp->add_option("--ply", comp.ply, "Input Gaussian PLY")->required();
    s_comp->add_option("--cameras", comp.cameras, "Training cameras for significance scores");
    s_comp->add_option("--out", comp.out, "Bundle directory")->required();
    s_comp->add_option("--grid", comp.grid, "grid.json to reuse the partition geometry");
    s_comp->add_option("--dims", comp.dims, "Block grid when no --grid is given");
    s_comp->add_option("--rates", comp.rates, "Compression rates, finest first")->delimiter(',');
    s_comp->add_option("--sh-degrees", comp.sh_degrees, "SH degree per level, finest first")->delimiter(',');
    s_comp->add_option("--intervals", comp.intervals, "Distance intervals as JSON, e.g. [[0,200],[200,null]]");
    s_comp->add_option("--n-mad", comp.n_mad, "MAD multiplier for block bounds");

    RenderArgs rend;
    auto* s_rend = app.add_subcommand("render", "Render cameras and score them against ground truth");
    s_rend->add_option("--scene", rend.scene, "LoD bundle, scene bundle or PLY")->required();
    s_rend->add_option("--cameras", rend.cameras, "Scene bundle or COLMAP model directory")->required();
    s_rend->add_option("--out", rend.out, "Output directory")->required();
    s_rend->add_option("--split", rend.split, "train, test or all");
    s_rend->add_option("--lod-mode", rend.lod_mode, "blockwise or pointwise");
    s_rend->add_flag("--no-lod", rend.no_lod, "Render the uncompressed source cloud");
    s_rend->add_option("--background", rend.background, "Background r,g,b in [0,1]")->delimiter(',');

    BenchArgs bench;
    auto* s_bench = app.add_subcommand("bench", "Looking-down altitude sweep with and without LoD");
    s_bench->add_option("--bundle", bench.bundle, "LoD bundle directory")->required();
    s_bench->add_option("--out", bench.out, "Report directory")->required();
    s_bench->add_option("--altitudes", bench.options.altitudes, "Altitudes in metres")->delimiter(',');
    s_bench->add_option("--per-altitude", bench.options.per_altitude, "Cameras per altitude");
    s_bench->add_option("--radius", bench.options.radius, "Sweep ring radius in metres");
    s_bench->add_option("--tilt", bench.options.tilt_deg, "Lean from straight down, degrees");
    s_bench->add_option("--width", bench.options.width, "Image width");
    s_bench->add_option("--height", bench.options.height, "Image height");
    s_bench->add_option("--fov", bench.options.hfov_deg, "Horizontal field of view, degrees");

    ServeArgs serve;
    auto* s_serve = app.add_subcommand("serve", "HTTP render service for a LoD bundle");
    s_serve->add_option("--bundle", serve.bundle, "LoD bundle directory")->required();
    s_serve->add_option("--bind", serve.bind, "host[:port]; port defaults to $CITYSPLAT_PORT or 8080");
    s_serve->add_option("--max-width", serve.max_width, "Largest accepted image width");
    s_serve->add_option("--max-height", serve.max_height, "Largest accepted image height");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*s_synth) {
            return cmd_synth(synth, out);
        }
        if (*s_part) {
            return cmd_partition(part, out);
        }
        if (*s_fuse) {
            return cmd_fuse(fuse, out);
        }
        if (*s_comp) {
            return cmd_compress(comp, out);
        }
        if (*s_rend) {
            return cmd_render(rend, out);
        }
        if (*s_bench) {
            return cmd_bench(bench, out);
        }
        if (*s_serve) {
            return cmd_serve(serve, out);
        }
    } catch (const ConfigError& e) {
        fmt::print(err, "config error: {}\n", e.what());
        return kExitConfig;
    } catch (const InvalidParameter& e) {
        fmt::print(err, "invalid parameter: {}\n", e.what());
        return kExitConfig;
    } catch (const DataError& e) {
        fmt::print(err, "data error: {}\n", e.what());
        return kExitData;
    } catch (const fs::filesystem_error& e) {
        fmt::print(err, "data error: {}\n", e.what());
        return kExitData;
    } catch (const std::exception& e) {
        fmt::print(err, "error: {}\n", e.what());
        return kExitFailure;
    }
    return kExitFailure;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv;
    argv.push_back("citysplat");
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

} // namespace citysplat::cli
