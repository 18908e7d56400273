#include "citysplat/render/rasterizer.hpp"

#include "citysplat/core/errors.hpp"
#include "citysplat/core/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace citysplat::render {

namespace {

constexpr std::size_t kProjectChunk = 4096;
constexpr double kMaxAlpha = 0.99;

struct ChunkResult {
    std::vector<SplatPrimitive> splats;
    std::size_t singular = 0;
};

} // namespace

CloudSegment segment_of(const GaussianCloud& cloud) {
    return {std::span<const Gaussian>(cloud.gaussians), cloud.sh_degree};
}

ProjectedFrame::ProjectedFrame(std::span<const CloudSegment> segments, const CameraView& cam,
                               const RenderSettings& settings)
    : cam_(cam), settings_(settings) {
    build(segments);
}

ProjectedFrame::ProjectedFrame(const GaussianCloud& cloud, const CameraView& cam, const RenderSettings& settings)
    : cam_(cam), settings_(settings) {
    const CloudSegment seg = segment_of(cloud);
    build(std::span<const CloudSegment>(&seg, 1));
}

void ProjectedFrame::build(std::span<const CloudSegment> segments) {
    settings_.validate();
    validate(cam_);

    struct Job {
        const CloudSegment* segment;
        std::size_t begin;
        std::size_t end;
        std::size_t base;
    };
    std::vector<Job> jobs;
    std::size_t base = 0;
    for (const auto& seg : segments) {
        for (std::size_t b = 0; b < seg.gaussians.size(); b += kProjectChunk) {
            jobs.push_back({&seg, b, std::min(seg.gaussians.size(), b + kProjectChunk), base});
        }
        base += seg.gaussians.size();
    }
    source_count_ = base;

    std::vector<ChunkResult> results(jobs.size());
    parallel_for(
        jobs.size(),
        [&](std::size_t j) {
            const Job& job = jobs[j];
            const int degree = std::min(settings_.sh_degree, job.segment->sh_degree);
            ChunkResult& r = results[j];
            SplatPrimitive s;
            for (std::size_t i = job.begin; i < job.end; ++i) {
                const auto idx = static_cast<std::uint32_t>(job.base + i);
                const ProjectStatus st = project_gaussian(job.segment->gaussians[i], cam_, settings_, degree, idx, s);
                if (st == ProjectStatus::Visible) {
                    r.splats.push_back(s);
                } else if (st == ProjectStatus::Singular) {
                    ++r.singular;
                }
            }
        },
        settings_.threads);

    std::size_t total = 0;
    for (const auto& r : results) {
        total += r.splats.size();
        singular_ += r.singular;
    }
    splats_.reserve(total);
    for (auto& r : results) {
        splats_.insert(splats_.end(), r.splats.begin(), r.splats.end());
    }
    std::sort(splats_.begin(), splats_.end(), [](const SplatPrimitive& a, const SplatPrimitive& b) {
        return a.depth < b.depth || (a.depth == b.depth && a.source_index < b.source_index);
    });

    const int ts = settings_.tile_size;
    tiles_x_ = (cam_.width + ts - 1) / ts;
    tiles_y_ = (cam_.height + ts - 1) / ts;
    const std::size_t n_tiles = static_cast<std::size_t>(tiles_x_) * tiles_y_;

    struct TileRect {
        int x0, x1, y0, y1;
    };
    std::vector<TileRect> rects(splats_.size());
    std::vector<std::uint32_t> counts(n_tiles + 1, 0);
    for (std::size_t i = 0; i < splats_.size(); ++i) {
        const SplatPrimitive& s = splats_[i];
        // Pixel (px, py) is sampled at its centre (px + 0.5, py + 0.5).
        const int px0 = std::max(0, static_cast<int>(std::ceil(s.mean2d.x() - s.extent.x() - 0.5)));
        const int px1 = std::min(cam_.width - 1, static_cast<int>(std::floor(s.mean2d.x() + s.extent.x() - 0.5)));
        const int py0 = std::max(0, static_cast<int>(std::ceil(s.mean2d.y() - s.extent.y() - 0.5)));
        const int py1 = std::min(cam_.height - 1, static_cast<int>(std::floor(s.mean2d.y() + s.extent.y() - 0.5)));
        if (px0 > px1 || py0 > py1) {
            rects[i] = {1, 0, 1, 0};
            continue;
        }
        rects[i] = {px0 / ts, px1 / ts, py0 / ts, py1 / ts};
        for (int ty = rects[i].y0; ty <= rects[i].y1; ++ty) {
            for (int tx = rects[i].x0; tx <= rects[i].x1; ++tx) {
                ++counts[static_cast<std::size_t>(ty) * tiles_x_ + tx + 1];
            }
        }
    }
    for (std::size_t t = 0; t < n_tiles; ++t) {
        counts[t + 1] += counts[t];
    }
    tile_offsets_ = counts;
    tile_splats_.resize(tile_offsets_.back());
    std::vector<std::uint32_t> cursor(tile_offsets_.begin(), tile_offsets_.end() - 1);
    for (std::size_t i = 0; i < splats_.size(); ++i) {
        const TileRect& r = rects[i];
        for (int ty = r.y0; ty <= r.y1; ++ty) {
            for (int tx = r.x0; tx <= r.x1; ++tx) {
                tile_splats_[cursor[static_cast<std::size_t>(ty) * tiles_x_ + tx]++] = static_cast<std::uint32_t>(i);
            }
        }
    }
}

Image ProjectedFrame::composite(std::span<const std::uint8_t> excluded, FrameStats* stats) const {
    if (!excluded.empty() && excluded.size() != source_count_) {
        throw InvalidParameter("exclusion mask size differs from the source count");
    }
    Image img(cam_.width, cam_.height, settings_.background);
    const Eigen::Vector3d bg = settings_.background.cast<double>();
    const int ts = settings_.tile_size;
    const std::size_t n_tiles = static_cast<std::size_t>(tiles_x_) * tiles_y_;
    std::vector<std::size_t> tile_fragments(n_tiles, 0);
    const bool masked = !excluded.empty();

    parallel_for(
        n_tiles,
        [&](std::size_t t) {
            const int tx = static_cast<int>(t % tiles_x_);
            const int ty = static_cast<int>(t / tiles_x_);
            const std::uint32_t begin = tile_offsets_[t];
            const std::uint32_t end = tile_offsets_[t + 1];
            if (begin == end) {
                return;
            }
            std::size_t frags = 0;
            const int x_end = std::min(cam_.width, (tx + 1) * ts);
            const int y_end = std::min(cam_.height, (ty + 1) * ts);
            for (int py = ty * ts; py < y_end; ++py) {
                for (int px = tx * ts; px < x_end; ++px) {
                    const double fx = px + 0.5;
                    const double fy = py + 0.5;
                    double T = 1.0;
                    double r = 0.0;
                    double g = 0.0;
                    double b = 0.0;
                    for (std::uint32_t k = begin; k < end; ++k) {
                        const SplatPrimitive& s = splats_[tile_splats_[k]];
                        if (masked && excluded[s.source_index]) {
                            continue;
                        }
                        const double dx = fx - s.mean2d.x();
                        const double dy = fy - s.mean2d.y();
                        const double power =
                            -0.5 * (s.conic.x() * dx * dx + s.conic.z() * dy * dy) - s.conic.y() * dx * dy;
                        if (power > 0.0) {
                            continue;
                        }
                        const double alpha = std::min(kMaxAlpha, s.opacity * std::exp(power));
                        if (alpha < settings_.alpha_floor) {
                            continue;
                        }
                        const double w = alpha * T;
                        r += s.color.x() * w;
                        g += s.color.y() * w;
                        b += s.color.z() * w;
                        T *= 1.0 - alpha;
                        ++frags;
                        if (T < settings_.transmittance_floor) {
                            break;
                        }
                    }
                    float* out = img.at(px, py);
                    out[0] = static_cast<float>(std::clamp(r + T * bg.x(), 0.0, 1.0));
                    out[1] = static_cast<float>(std::clamp(g + T * bg.y(), 0.0, 1.0));
                    out[2] = static_cast<float>(std::clamp(b + T * bg.z(), 0.0, 1.0));
                }
            }
            tile_fragments[t] = frags;
        },
        settings_.threads);

    if (stats != nullptr) {
        stats->fragments = 0;
        for (std::size_t f : tile_fragments) {
            stats->fragments += f;
        }
        if (masked) {
            stats->visible = static_cast<std::size_t>(std::count_if(
                splats_.begin(), splats_.end(), [&](const SplatPrimitive& s) { return !excluded[s.source_index]; }));
        } else {
            stats->visible = splats_.size();
        }
        stats->singular_skipped = singular_;
    }
    return img;
}

Image rasterize(const GaussianCloud& cloud, const CameraView& cam, const RenderSettings& settings) {
    return ProjectedFrame(cloud, cam, settings).composite();
}

Image rasterize(std::span<const CloudSegment> segments, const CameraView& cam, const RenderSettings& settings) {
    return ProjectedFrame(segments, cam, settings).composite();
}

RenderResult rasterize_stats(std::span<const CloudSegment> segments, const CameraView& cam,
                             const RenderSettings& settings) {
    const auto t0 = std::chrono::steady_clock::now();
    RenderResult out;
    ProjectedFrame frame(segments, cam, settings);
    out.image = frame.composite({}, &out.stats);
    out.stats.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

RenderResult rasterize_stats(const GaussianCloud& cloud, const CameraView& cam, const RenderSettings& settings) {
    const CloudSegment seg = segment_of(cloud);
    return rasterize_stats(std::span<const CloudSegment>(&seg, 1), cam, settings);
}

} // namespace citysplat::render
