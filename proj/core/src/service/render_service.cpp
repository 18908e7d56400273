#include "citysplat/service/render_service.hpp"

#include "citysplat/io/config.hpp"
#include "citysplat/io/png.hpp"
#include "citysplat/lod/bundle.hpp"
#include "citysplat/render/rasterizer.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>

namespace citysplat::service {

using nlohmann::json;

namespace {

json parse_body(const std::string& body, std::size_t max_bytes) {
    if (body.size() > max_bytes) {
        throw RequestError(413, "body", fmt::format("request body exceeds {} bytes", max_bytes));
    }
    try {
        return json::parse(body);
    } catch (const json::exception& e) {
        throw RequestError(400, "body", fmt::format("malformed JSON: {}", e.what()));
    }
}

double number_field(const json& obj, const char* key, const std::string& prefix) {
    const std::string field = prefix + key;
    if (!obj.contains(key)) {
        throw RequestError(400, field, fmt::format("missing field {}", field));
    }
    const json& v = obj.at(key);
    if (!v.is_number()) {
        throw RequestError(400, field, fmt::format("{} must be a number", field));
    }
    const double d = v.get<double>();
    if (!std::isfinite(d)) {
        throw RequestError(400, field, fmt::format("{} must be finite", field));
    }
    return d;
}

int int_field(const json& obj, const char* key, const std::string& prefix) {
    const double d = number_field(obj, key, prefix);
    if (d != std::floor(d) || d < 1.0 || d > 1e9) {
        throw RequestError(400, prefix + key, fmt::format("{}{} must be a positive integer", prefix, key));
    }
    return static_cast<int>(d);
}

std::vector<double> numbers(const json& v, std::size_t n, const std::string& field) {
    if (!v.is_array() || v.size() != n) {
        throw RequestError(400, field, fmt::format("{} must be an array of {} numbers", field, n));
    }
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number() || !std::isfinite(x.get<double>())) {
            throw RequestError(400, field, fmt::format("{} must contain finite numbers", field));
        }
        out.push_back(x.get<double>());
    }
    return out;
}

DistanceIntervals intervals_from(const json& v, const std::string& field) {
    try {
        DistanceIntervals iv = io::parse_intervals(v.dump());
        iv.validate();
        return iv;
    } catch (const Error& e) {
        throw RequestError(400, field, e.what());
    }
}

CameraView camera_from(const json& c, const ServiceOptions& options) {
    if (!c.is_object()) {
        throw RequestError(400, "camera", "camera must be an object");
    }
    const std::string p = "camera.";
    CameraView cam;
    cam.width = int_field(c, "width", p);
    cam.height = int_field(c, "height", p);
    if (cam.width > options.max_width) {
        throw RequestError(413, "camera.width", fmt::format("width {} exceeds the maximum {}", cam.width, options.max_width));
    }
    if (cam.height > options.max_height) {
        throw RequestError(413, "camera.height",
                           fmt::format("height {} exceeds the maximum {}", cam.height, options.max_height));
    }
    cam.fx = number_field(c, "fx", p);
    cam.fy = number_field(c, "fy", p);
    cam.cx = number_field(c, "cx", p);
    cam.cy = number_field(c, "cy", p);
    if (!(cam.fx > 0.0)) {
        throw RequestError(400, "camera.fx", "camera.fx must be positive");
    }
    if (!(cam.fy > 0.0)) {
        throw RequestError(400, "camera.fy", "camera.fy must be positive");
    }
    if (c.contains("rotation_w2c")) {
        const json& r = c["rotation_w2c"];
        std::vector<double> flat;
        if (r.is_array() && r.size() == 3 && r[0].is_array()) {
            for (int i = 0; i < 3; ++i) {
                const auto row = numbers(r[i], 3, "camera.rotation_w2c");
                flat.insert(flat.end(), row.begin(), row.end());
            }
        } else {
            flat = numbers(r, 9, "camera.rotation_w2c");
        }
        for (int i = 0; i < 9; ++i) {
            cam.rotation_w2c(i / 3, i % 3) = flat[i];
        }
    } else if (c.contains("qvec_w2c")) {
        const auto q = numbers(c["qvec_w2c"], 4, "camera.qvec_w2c");
        Eigen::Quaterniond quat(q[0], q[1], q[2], q[3]);
        if (quat.norm() < 1e-12) {
            throw RequestError(400, "camera.qvec_w2c", "camera.qvec_w2c must be non-zero");
        }
        cam.rotation_w2c = quat.normalized().toRotationMatrix();
    } else {
        throw RequestError(400, "camera.rotation_w2c", "missing field camera.rotation_w2c");
    }
    if (!c.contains("translation_w2c")) {
        throw RequestError(400, "camera.translation_w2c", "missing field camera.translation_w2c");
    }
    const auto t = numbers(c["translation_w2c"], 3, "camera.translation_w2c");
    cam.translation_w2c = {t[0], t[1], t[2]};
    try {
        validate(cam);
    } catch (const Error& e) {
        throw RequestError(400, "camera.rotation_w2c", e.what());
    }
    return cam;
}

json block_bounds_json(const std::optional<Bounds3>& b) {
    if (!b) {
        return nullptr;
    }
    return {{"min", {b->min.x(), b->min.y(), b->min.z()}}, {"max", {b->max.x(), b->max.y(), b->max.z()}}};
}

} // namespace

RenderRequest parse_render_request(const std::string& body, const ServiceOptions& options) {
    const json doc = parse_body(body, options.max_body_bytes);
    if (!doc.is_object()) {
        throw RequestError(400, "body", "request must be a JSON object");
    }
    if (!doc.contains("camera")) {
        throw RequestError(400, "camera", "missing field camera");
    }
    RenderRequest req;
    req.camera = camera_from(doc["camera"], options);
    if (doc.contains("lod") && !doc["lod"].is_null()) {
        const json& l = doc["lod"];
        if (!l.is_object()) {
            throw RequestError(400, "lod", "lod must be an object");
        }
        if (l.contains("enabled")) {
            if (!l["enabled"].is_boolean()) {
                throw RequestError(400, "lod.enabled", "lod.enabled must be a boolean");
            }
            req.lod_enabled = l["enabled"].get<bool>();
        }
        if (l.contains("intervals") && !l["intervals"].is_null()) {
            req.intervals = intervals_from(l["intervals"], "lod.intervals");
        }
        if (l.contains("mode")) {
            const std::string mode = l["mode"].is_string() ? l["mode"].get<std::string>() : "";
            if (mode == "blockwise") {
                req.mode = lod::LodMode::BlockWise;
            } else if (mode == "pointwise") {
                req.mode = lod::LodMode::PointWise;
            } else {
                throw RequestError(400, "lod.mode", "lod.mode must be \"blockwise\" or \"pointwise\"");
            }
        }
    }
    if (doc.contains("want_overlay")) {
        if (!doc["want_overlay"].is_boolean()) {
            throw RequestError(400, "want_overlay", "want_overlay must be a boolean");
        }
        req.want_overlay = doc["want_overlay"].get<bool>();
    }
    return req;
}

std::string camera_to_json(const CameraView& cam) {
    json r = json::array();
    for (int i = 0; i < 3; ++i) {
        r.push_back({cam.rotation_w2c(i, 0), cam.rotation_w2c(i, 1), cam.rotation_w2c(i, 2)});
    }
    json doc = {{"width", cam.width},
                {"height", cam.height},
                {"fx", cam.fx},
                {"fy", cam.fy},
                {"cx", cam.cx},
                {"cy", cam.cy},
                {"rotation_w2c", r},
                {"translation_w2c", {cam.translation_w2c.x(), cam.translation_w2c.y(), cam.translation_w2c.z()}}};
    return doc.dump();
}

std::string stats_to_json(const FrameStats& s) {
    json blocks = json::array();
    for (const auto& b : s.blocks) {
        blocks.push_back({{"id", b.id},
                          {"level", b.level},
                          {"distance", b.distance},
                          {"count", b.count},
                          {"camera_inside", b.camera_inside},
                          {"screen_box", b.screen_box}});
    }
    json doc = {{"render_ms", s.render_ms},
                {"selection_ms", s.selection_ms},
                {"visible_gaussians", s.visible_gaussians},
                {"fragments", s.fragments},
                {"fps_estimate", s.fps_estimate},
                {"lod_enabled", s.lod_enabled},
                {"blocks", blocks}};
    return doc.dump();
}

RenderService::RenderService(std::shared_ptr<const lod::LodScene> scene, ServiceOptions options)
    : scene_(std::move(scene)), options_(options) {
    if (!scene_) {
        throw InvalidParameter("render service needs a scene");
    }
    options_.settings.validate();
    intervals_ = std::make_shared<const DistanceIntervals>(scene_->intervals);
}

std::string RenderService::scene_info_json() const {
    json sizes = json::array();
    json degrees = json::array();
    json rates = json::array();
    for (const auto& l : scene_->levels) {
        sizes.push_back(l.size());
        degrees.push_back(l.sh_degree);
        rates.push_back(l.rate);
    }
    json blocks = json::array();
    for (std::size_t j = 0; j < scene_->block_count(); ++j) {
        blocks.push_back({{"id", j}, {"bounds", block_bounds_json(scene_->block_bounds[j])}});
    }
    json doc = {{"block_count", scene_->block_count()},
                {"dims", {scene_->dims.nx, scene_->dims.ny, scene_->dims.nz}},
                {"level_count", scene_->level_count()},
                {"level_sizes", sizes},
                {"level_sh_degrees", degrees},
                {"level_rates", rates},
                {"intervals", json::parse(lod::intervals_json(intervals()))},
                {"n_mad", std::isinf(scene_->n_mad) ? json(nullptr) : json(scene_->n_mad)},
                {"source_size", scene_->source.size()},
                {"max_width", options_.max_width},
                {"max_height", options_.max_height},
                {"blocks", blocks}};
    return doc.dump();
}

std::string RenderService::blocks_json() const {
    json blocks = json::array();
    for (std::size_t j = 0; j < scene_->block_count(); ++j) {
        const auto& b = scene_->block_bounds[j];
        if (!b) {
            continue;
        }
        json corners = json::array();
        for (const auto& c : b->corners()) {
            corners.push_back({c.x(), c.y(), c.z()});
        }
        blocks.push_back({{"id", j},
                          {"min", {b->min.x(), b->min.y(), b->min.z()}},
                          {"max", {b->max.x(), b->max.y(), b->max.z()}},
                          {"corners", corners}});
    }
    return json{{"blocks", blocks}}.dump();
}

FrameResult RenderService::render_frame(const RenderRequest& request) {
    std::shared_ptr<const DistanceIntervals> iv;
    if (request.intervals) {
        iv = std::make_shared<const DistanceIntervals>(*request.intervals);
    } else {
        std::lock_guard lock(mutex_);
        iv = intervals_;
    }
    if (request.lod_enabled && iv->size() != scene_->level_count()) {
        throw RequestError(400, "lod.intervals",
                           fmt::format("{} intervals given for {} levels", iv->size(), scene_->level_count()));
    }

    FrameResult out;
    const auto t0 = std::chrono::steady_clock::now();
    lod::LodSelection sel;
    sel.mode = request.lod_enabled ? request.mode : lod::LodMode::None;
    const lod::RenderSet set = lod::assemble_render_set(*scene_, request.camera, sel, iv.get());
    render::RenderResult rr = render::rasterize_stats(set.segments, request.camera, options_.settings);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    out.stats.render_ms = ms;
    out.stats.selection_ms = set.selection_ms;
    out.stats.visible_gaussians = rr.stats.visible;
    out.stats.fragments = rr.stats.fragments;
    out.stats.fps_estimate = ms > 0.0 ? 1000.0 / ms : 0.0;
    out.stats.lod_enabled = request.lod_enabled;
    for (const auto& d : set.decisions) {
        if (d.visible) {
            out.stats.blocks.push_back({d.block, d.level, d.distance, d.count, d.camera_inside, d.screen_box});
        }
    }
    out.image = std::move(rr.image);
    if (request.want_overlay) {
        draw_block_overlay(out.image, out.stats.blocks, scene_->level_count());
    }
    out.png = io::encode_png(out.image);

    const std::string js = stats_to_json(out.stats);
    std::lock_guard lock(mutex_);
    last_stats_ = js;
    return out;
}

std::string RenderService::update_lod_config(const std::string& body) {
    const json doc = parse_body(body, options_.max_body_bytes);
    if (!doc.is_object() || !doc.contains("intervals")) {
        throw RequestError(400, "intervals", "missing field intervals");
    }
    const DistanceIntervals iv = intervals_from(doc["intervals"], "intervals");
    if (iv.size() != scene_->level_count()) {
        throw RequestError(400, "intervals",
                           fmt::format("{} intervals given for {} levels", iv.size(), scene_->level_count()));
    }
    set_intervals(iv);
    return json{{"ok", true}, {"intervals", json::parse(lod::intervals_json(iv))}}.dump();
}

void RenderService::set_intervals(const DistanceIntervals& intervals) {
    intervals.validate();
    auto next = std::make_shared<const DistanceIntervals>(intervals);
    std::lock_guard lock(mutex_);
    intervals_ = std::move(next);
}

DistanceIntervals RenderService::intervals() const {
    std::lock_guard lock(mutex_);
    return *intervals_;
}

std::optional<std::string> RenderService::last_stats_json() const {
    std::lock_guard lock(mutex_);
    return last_stats_;
}

void draw_block_overlay(Image& image, const std::vector<BlockStat>& blocks, std::size_t level_count) {
    for (const auto& b : blocks) {
        const double t = level_count > 1 ? static_cast<double>(b.level) / static_cast<double>(level_count - 1) : 1.0;
        const Eigen::Vector3f color(static_cast<float>(1.0 - t), static_cast<float>(t), b.camera_inside ? 1.0f : 0.0f);
        const int x0 = std::clamp(static_cast<int>(std::floor(b.screen_box[0])), 0, image.width - 1);
        const int y0 = std::clamp(static_cast<int>(std::floor(b.screen_box[1])), 0, image.height - 1);
        const int x1 = std::clamp(static_cast<int>(std::ceil(b.screen_box[2])) - 1, 0, image.width - 1);
        const int y1 = std::clamp(static_cast<int>(std::ceil(b.screen_box[3])) - 1, 0, image.height - 1);
        auto put = [&](int x, int y) {
            float* p = image.at(x, y);
            p[0] = color.x();
            p[1] = color.y();
            p[2] = color.z();
        };
        for (int x = x0; x <= x1; ++x) {
            put(x, y0);
            put(x, y1);
        }
        for (int y = y0; y <= y1; ++y) {
            put(x0, y);
            put(x1, y);
        }
    }
}

} // namespace citysplat::service
