// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
//
//   citysplat_acceptance [name ...]   runs only the named criteria

#include "citysplat/cli/bench.hpp"
#include "citysplat/io/ply.hpp"
#include "citysplat/io/png.hpp"
#include "citysplat/io/synthetic.hpp"
#include "citysplat/lod/bounds.hpp"
#include "citysplat/lod/lod_scene.hpp"
#include "citysplat/metrics/metrics.hpp"
#include "citysplat/partition/assignment.hpp"
#include "citysplat/partition/contraction.hpp"
#include "citysplat/partition/fusion.hpp"
#include "citysplat/partition/grid.hpp"
#include "citysplat/render/rasterizer.hpp"

#include "oracles.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>

using namespace citysplat;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

// ---------------------------------------------------------------- shared scene

struct City {
    io::SceneBundle bundle;
    std::vector<CameraView> views;
    partition::ContractionMap map;
};

const City& city() {
    static const City c = [] {
        City out;
        io::SyntheticCityOptions o;
        o.seed = 2024;
        o.gaussian_budget = 50000;
        o.n_cameras = 64;
        out.bundle = io::generate_synthetic_city(o);
        out.views = out.bundle.views();
        out.map = partition::foreground_map(out.bundle.cloud, io::RunConfig{});
        return out;
    }();
    return c;
}

Eigen::Vector3d contracted(const Eigen::Vector3d& p, const partition::ContractionMap& map) {
    const Eigen::Vector3d n =
        (2.0 * (p - map.p_min).array() / (map.p_max - map.p_min).array() - 1.0).matrix();
    return oracle::contract(n);
}

GaussianCloud subset(const GaussianCloud& c, const std::vector<char>& keep) {
    GaussianCloud out;
    out.sh_degree = c.sh_degree;
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (keep[i]) {
            out.gaussians.push_back(c[i]);
        }
    }
    return out;
}

// ---------------------------------------------------------------- criteria

Outcome renderer_oracle() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(101);
    std::uniform_int_distribution<int> count(1, 32);
    std::uniform_int_distribution<int> size(24, 64);
    render::RenderSettings tiled;
    tiled.transmittance_floor = 0.0;
    double worst = 0.0;
    std::size_t lit = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const GaussianCloud cloud = oracle::random_cloud(rng, static_cast<std::size_t>(count(rng)));
        const CameraView cam = oracle::random_camera(rng, size(rng), size(rng));
        const Image a = render::rasterize(cloud, cam, tiled);
        const Image b = oracle::naive_render(cloud, cam);
        worst = std::max(worst, oracle::max_abs_diff(a, b));
        lit += std::any_of(a.pixels.begin(), a.pixels.end(), [](float v) { return v > 0.0f; });
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-5 && secs < 60.0 && lit > 150,
            fmt::format("max |diff| {:.2e} over 200 clouds ({} with coverage), {:.1f} s", worst, lit, secs)};
}

Outcome contraction_suite() {
    std::mt19937_64 rng(102);
    std::uniform_real_distribution<double> inside(-1.0, 1.0);
    std::normal_distribution<double> wide(0.0, 1e3);
    std::size_t identity_bad = 0, bounds_bad = 0, cont_bad = 0;
    double worst_jump = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const Eigen::Vector3d p(inside(rng), inside(rng), inside(rng));
        identity_bad += partition::contract(p) != p;
        const Eigen::Vector3d q(wide(rng), wide(rng), wide(rng));
        bounds_bad += partition::contract(q).cwiseAbs().maxCoeff() > 2.0;
    }
    for (double big : {1e10, 1e100, 1e300, -1e300}) {
        bounds_bad += partition::contract(Eigen::Vector3d(big, 1.0, -big)).cwiseAbs().maxCoeff() > 2.0;
    }
    std::normal_distribution<double> n;
    for (int i = 0; i < 10000; ++i) {
        Eigen::Vector3d d(n(rng), n(rng), n(rng));
        d /= d.cwiseAbs().maxCoeff();
        const double jump =
            (partition::contract((1.0 + 1e-9) * d) - partition::contract((1.0 - 1e-9) * d)).cwiseAbs().maxCoeff();
        worst_jump = std::max(worst_jump, jump);
        cont_bad += jump >= 1e-6;
    }
    const bool points = partition::contract({0.5, 0.5, 0.5}) == Eigen::Vector3d(0.5, 0.5, 0.5) &&
                        partition::contract({2, 0, 0}) == Eigen::Vector3d(1.5, 0, 0) &&
                        partition::contract({4, 4, 0}) == Eigen::Vector3d(1.75, 1.75, 0);
    return {identity_bad == 0 && bounds_bad == 0 && cont_bad == 0 && points,
            fmt::format("identity violations {}, out of bounds {}, max boundary jump {:.1e}, closed-form points {}",
                        identity_bad, bounds_bad, worst_jump, points ? "exact" : "wrong")};
}

Outcome assignment_semantics() {
    const City& c = city();
    const GaussianCloud& cloud = c.bundle.cloud;
    const GridDims dims{2, 2, 1};
    const auto grid = partition::grid_partition(cloud, c.map, dims);
    partition::AssignmentOptions opts;
    opts.epsilon = 0.05;
    opts.min_count = 1000;
    const auto m = partition::assign(c.views, grid, cloud, opts);

    // Independent membership and per-block removal clouds.
    std::vector<std::size_t> block(cloud.size());
    for (std::size_t k = 0; k < cloud.size(); ++k) {
        block[k] = oracle::bin_point(contracted(cloud[k].position, c.map), dims);
    }
    std::vector<GaussianCloud> without(4), only(4);
    for (std::size_t j = 0; j < 4; ++j) {
        std::vector<char> keep(cloud.size());
        for (std::size_t k = 0; k < cloud.size(); ++k) {
            keep[k] = block[k] != j;
        }
        without[j] = subset(cloud, keep);
        for (auto& v : keep) {
            v = !v;
        }
        only[j] = subset(cloud, keep);
    }

    std::size_t b1_bad = 0, b2_bad = 0, eq4_bad = 0, zero_pairs = 0, zero_bad = 0, enlarged = 0, near_tie = 0;
    for (std::size_t j = 0; j < 4; ++j) {
        enlarged += m.enlarged[j];
    }
    oracle::NaiveSettings ns;
    for (std::size_t i = 0; i < c.views.size(); ++i) {
        const CameraView& cam = c.views[i];
        const std::size_t home = oracle::bin_point(contracted(cam.camera_center(), c.map), dims);
        const CameraView small = cam.downscaled(opts.downscale);
        const Image full = render::rasterize(cloud, small);
        for (std::size_t j = 0; j < 4; ++j) {
            const bool b2 = home == j;
            b2_bad += (m.b2[i * 4 + j] != 0) != b2;
            eq4_bad += b2 && !m.at(i, j);
            const double loss = 1.0 - oracle::ssim(full, render::rasterize(without[j], small));
            const bool b1 = loss > opts.epsilon;
            if ((m.b1[i * 4 + j] != 0) != b1) {
                if (std::abs(loss - opts.epsilon) < 1e-6) {
                    ++near_tie;
                } else {
                    ++b1_bad;
                }
            }
            if (oracle::count_visible(only[j], small, ns) == 0) {
                ++zero_pairs;
                zero_bad += m.b1[i * 4 + j] != 0;
            }
        }
    }
    const bool pass = b1_bad == 0 && b2_bad == 0 && eq4_bad == 0 && zero_bad == 0 && enlarged == 0 && near_tie == 0;
    return {pass, fmt::format("{} Gaussians x {} poses: B1 mismatches {}, B2 mismatches {}, Eq4 misses {}, "
                              "zero-contribution pairs {} ({} assigned), enlarged blocks {}",
                              cloud.size(), c.views.size(), b1_bad + near_tie, b2_bad, eq4_bad, zero_pairs,
                              zero_bad, enlarged)};
}

Outcome fusion_identity() {
    const City& c = city();
    const GaussianCloud& cloud = c.bundle.cloud;
    const GridDims dims{3, 3, 1};
    const auto grid = partition::grid_partition(cloud, c.map, dims);
    const auto parts = partition::split_by_block(cloud, grid);
    std::vector<partition::BlockCloud> in;
    for (std::size_t j = parts.size(); j-- > 0;) {
        in.push_back({parts[j], j});
    }
    const GaussianCloud fused = partition::fuse(in, grid);
    const bool multiset = oracle::same_multiset(fused, cloud);

    // Views hovering over the internal block edges, looking down with a lean.
    std::vector<double> edges_x, edges_y;
    for (int k = 1; k < 3; ++k) {
        const double e = -2.0 + 4.0 * k / 3.0;
        edges_x.push_back(c.map.p_min.x() + 0.5 * (e + 1.0) * (c.map.p_max.x() - c.map.p_min.x()));
        edges_y.push_back(c.map.p_min.y() + 0.5 * (e + 1.0) * (c.map.p_max.y() - c.map.p_min.y()));
    }
    std::vector<CameraView> views;
    std::mt19937_64 rng(104);
    std::uniform_real_distribution<double> along_x(c.map.p_min.x(), c.map.p_max.x());
    std::uniform_real_distribution<double> along_y(c.map.p_min.y(), c.map.p_max.y());
    std::uniform_real_distribution<double> alt(60.0, 250.0);
    for (int v = 0; v < 16; ++v) {
        Eigen::Vector3d target;
        if (v < 4) {
            target = {edges_x[v % 2], edges_y[v / 2], 0.0};
        } else if (v % 2 == 0) {
            target = {edges_x[v % 4 / 2], along_y(rng), 0.0};
        } else {
            target = {along_x(rng), edges_y[v % 4 / 2], 0.0};
        }
        const Eigen::Vector3d eye = target + Eigen::Vector3d(20.0, 10.0, alt(rng));
        views.push_back(CameraView::look_at(eye, target, Eigen::Vector3d::UnitY(), 160, 120, 60.0 * std::numbers::pi / 180.0));
    }
    std::size_t differing = 0, straddling = 0;
    for (const auto& cam : views) {
        differing += io::encode_png(render::rasterize(fused, cam)) != io::encode_png(render::rasterize(cloud, cam));
        std::set<std::size_t> seen;
        for (std::size_t k = 0; k < cloud.size(); ++k) {
            const Eigen::Vector3d t = cam.to_camera(cloud[k].position);
            if (t.z() <= 0.01) {
                continue;
            }
            const Eigen::Vector2d px = oracle::project_point(cam, cloud[k].position);
            if (px.x() >= 0 && px.x() < cam.width && px.y() >= 0 && px.y() < cam.height) {
                seen.insert(grid.membership[k]);
            }
        }
        straddling += seen.size() >= 2;
    }
    return {multiset && differing == 0 && straddling == views.size(),
            fmt::format("multiset identity {}, {} of {} boundary views differ ({} see two or more blocks)",
                        multiset ? "holds" : "broken", differing, views.size(), straddling)};
}

Outcome mad_floaters() {
    std::vector<Eigen::Vector3d> pts;
    for (int v = 0; v <= 9; ++v) {
        pts.emplace_back(v, -v, 2.0 * v);
    }
    pts.emplace_back(1000, -1000, 2000);
    const Bounds3 b = lod::mad_bounds(pts, 4.0);
    const Bounds3 all = lod::mad_bounds(pts, kInfinity);
    const bool upper = b.max.x() == 17.0 && b.min.x() == 0.0;
    const bool exact = all.min == Eigen::Vector3d(0, -1000, 0) && all.max == Eigen::Vector3d(1000, 0, 2000);
    return {upper && exact, fmt::format("n_MAD=4 bounds [{}, {}]; n_MAD=inf bounds [{}, {}]", b.min.x(), b.max.x(),
                                        all.min.x(), all.max.x())};
}

// LoD scene and a 100-camera sweep shared by the trend and ablation criteria.
struct LodSweep {
    std::shared_ptr<lod::LodScene> scene;
    std::vector<CameraView> cams;
    std::vector<Image> gt;
};

const LodSweep& lod_sweep() {
    static const LodSweep s = [] {
        LodSweep out;
        const City& c = city();
        const auto grid = partition::grid_partition(c.bundle.cloud, c.map, {4, 4, 1});
        lod::LodBuildOptions o; // rates 0.5 / 0.34 / 0.25, intervals [0,200), [200,400), [400,inf)
        out.scene = std::make_shared<lod::LodScene>(lod::build_lod_scene(c.bundle.cloud, grid, c.views, o));
        for (double altitude : {150.0, 250.0, 350.0, 450.0}) {
            for (const auto& cam : io::looking_down_sweep({0, 0, 0}, 150.0, altitude, 25, 160, 120, 60.0)) {
                out.cams.push_back(cam);
                out.gt.push_back(render::rasterize(c.bundle.cloud, cam));
            }
        }
        return out;
    }();
    return s;
}

// Frames identical to the ground truth count as this many dB in averages.
constexpr double kPsnrCap = 100.0;

struct FrameResult {
    double psnr = 0.0;
    std::size_t visible = 0;
    double ms = 0.0;
    double selection_ms = 0.0;
};

FrameResult render_mode(const lod::LodScene& scene, const CameraView& cam, const lod::LodSelection& sel,
                        const Image& gt) {
    const auto t0 = Clock::now();
    const lod::RenderSet set = lod::assemble_render_set(scene, cam, sel);
    const render::RenderResult rr = render::rasterize_stats(set.segments, cam);
    FrameResult f;
    f.ms = seconds_since(t0) * 1e3;
    f.selection_ms = set.selection_ms;
    f.visible = rr.stats.visible;
    f.psnr = std::min(kPsnrCap, metrics::psnr(rr.image, gt));
    return f;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Outcome lod_trend() {
    const LodSweep& s = lod_sweep();
    const lod::LodScene& scene = *s.scene;
    const std::size_t n = s.cams.size();
    std::vector<double> p_lod(n), p_fine(n), p_coarse(n), t_lod(n), t_none(n);
    std::size_t budget_bad = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const FrameResult lod = render_mode(scene, s.cams[i], {lod::LodMode::BlockWise, 0}, s.gt[i]);
        const FrameResult fine = render_mode(scene, s.cams[i], {lod::LodMode::SingleLevel, 2}, s.gt[i]);
        const FrameResult coarse = render_mode(scene, s.cams[i], {lod::LodMode::SingleLevel, 0}, s.gt[i]);
        const FrameResult none = render_mode(scene, s.cams[i], {lod::LodMode::None, 0}, s.gt[i]);
        budget_bad += !(lod.visible <= fine.visible && fine.visible <= none.visible);
        p_lod[i] = lod.psnr;
        p_fine[i] = fine.psnr;
        p_coarse[i] = coarse.psnr;
        t_lod[i] = lod.ms;
        t_none[i] = none.ms;
    }
    std::mt19937_64 rng(106);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    const int resamples = 1000;
    int ordered = 0;
    for (int r = 0; r < resamples; ++r) {
        double f = 0, l = 0, c = 0;
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t i = pick(rng);
            f += p_fine[i];
            l += p_lod[i];
            c += p_coarse[i];
        }
        ordered += f >= l && l >= c;
    }
    const double frac = static_cast<double>(ordered) / resamples;
    const bool pass = budget_bad == 0 && frac >= 0.9 && mean(t_lod) < mean(t_none);
    return {pass, fmt::format("budget order violated on {} of {} frames; mean PSNR LoD2 {:.2f} / LoD {:.2f} / LoD0 "
                              "{:.2f} dB, order held in {:.1f}% of resamples; mean ms LoD {:.1f} vs no-LoD {:.1f}",
                              budget_bad, n, mean(p_fine), mean(p_lod), mean(p_coarse), 100.0 * frac, mean(t_lod),
                              mean(t_none))};
}

Outcome altitude_sweep() {
    const LodSweep& s = lod_sweep();
    const auto t0 = Clock::now();
    cli::BenchOptions opts; // altitudes 150 / 300 / 450, 16 cameras each
    const cli::BenchReport report = cli::run_bench(*s.scene, opts);
    const double secs = seconds_since(t0);
    const double top = *std::max_element(opts.altitudes.begin(), opts.altitudes.end());
    std::size_t lod_min = 0, fine_min = 0;
    for (const auto& a : report.aggregates) {
        if (a.altitude == top && a.mode == cli::BenchMode::Lod) {
            lod_min = a.min_visible;
        }
        if (a.altitude == top && a.mode == cli::BenchMode::Finest) {
            fine_min = a.min_visible;
        }
    }
    return {lod_min < fine_min && secs < 600.0,
            fmt::format("min visible at {} m: LoD {} vs LoD2 {}; bench took {:.1f} s", top, lod_min, fine_min, secs)};
}

Outcome pointwise_ablation() {
    const LodSweep& s = lod_sweep();
    const std::size_t n = s.cams.size();
    std::vector<double> p_block(n), p_point(n), sel_block(n), sel_point(n);
    for (std::size_t i = 0; i < n; ++i) {
        const FrameResult b = render_mode(*s.scene, s.cams[i], {lod::LodMode::BlockWise, 0}, s.gt[i]);
        const FrameResult p = render_mode(*s.scene, s.cams[i], {lod::LodMode::PointWise, 0}, s.gt[i]);
        p_block[i] = b.psnr;
        p_point[i] = p.psnr;
        sel_block[i] = b.selection_ms;
        sel_point[i] = p.selection_ms;
    }
    const double gap = std::abs(mean(p_point) - mean(p_block));
    const double mb = median_of(sel_block), mp = median_of(sel_point);
    std::string per_altitude;
    for (std::size_t a = 0; a < 4; ++a) {
        const std::vector<double> b(p_block.begin() + 25 * a, p_block.begin() + 25 * (a + 1));
        const std::vector<double> p(p_point.begin() + 25 * a, p_point.begin() + 25 * (a + 1));
        per_altitude += fmt::format("{}{:.0f} m {:.1f}/{:.1f}", a ? ", " : "", s.cams[25 * a].camera_center().z(),
                                    mean(b), mean(p));
    }
    return {gap <= 0.5 && mp > mb,
            fmt::format("mean PSNR block-wise {:.2f} dB, point-wise {:.2f} dB (gap {:.2f}; by altitude {}); "
                        "median selection ms block-wise {:.3f}, point-wise {:.3f}",
                        mean(p_block), mean(p_point), gap, per_altitude, mb, mp)};
}

Outcome ply_and_ssim() {
    std::mt19937_64 rng(109);
    GaussianCloud cloud = oracle::random_cloud(rng, 1000, 10.0);
    std::normal_distribution<float> n(0.0f, 0.5f);
    for (auto& g : cloud.gaussians) {
        for (int r = 0; r < 16; ++r) {
            for (int ch = 0; ch < 3; ++ch) {
                g.sh(r, ch) = n(rng);
            }
        }
    }
    const auto bytes = io::encode_ply(cloud);
    const auto again = io::encode_ply(io::decode_ply(bytes));
    const bool ply = bytes == again;
    double worst = 0.0;
    for (int k = 0; k < 50; ++k) {
        const Image a = k % 2 ? oracle::random_image(rng, 64, 64) : oracle::smooth_random_image(rng, 64, 64);
        const Image b = k % 3 ? oracle::smooth_random_image(rng, 64, 64) : oracle::random_image(rng, 64, 64);
        worst = std::max(worst, std::abs(metrics::ssim(a, b) - oracle::ssim(a, b)));
    }
    return {ply && worst <= 1e-6, fmt::format("PLY {} bytes {}; max SSIM deviation {:.2e} over 50 pairs",
                                             bytes.size(), ply ? "identical" : "differ", worst)};
}

struct Criterion {
    const char* name;
    std::function<Outcome()> run;
};

} // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria{
        {"renderer-oracle-equivalence", renderer_oracle},
        {"contraction-suite", contraction_suite},
        {"assignment-semantics", assignment_semantics},
        {"fusion-identity", fusion_identity},
        {"mad-floater-rejection", mad_floaters},
        {"lod-budget-quality-trend", lod_trend},
        {"altitude-sweep", altitude_sweep},
        {"pointwise-ablation", pointwise_ablation},
        {"ply-roundtrip-and-ssim", ply_and_ssim},
    };
    const std::set<std::string> only(argv + 1, argv + argc);
    int failed = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && !only.count(c.name)) {
            continue;
        }
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, fmt::format("exception: {}", e.what())};
        }
        failed += !o.pass;
        fmt::print("{} {}: {} [{:.1f} s]\n", o.pass ? "PASS" : "FAIL", c.name, o.detail, seconds_since(t0));
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
