#include "citysplat/io/scene_bundle.hpp"

#include "citysplat/core/errors.hpp"
#include "citysplat/io/atomic_file.hpp"
#include "citysplat/io/colmap.hpp"
#include "citysplat/io/ply.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <map>
#include <set>

namespace citysplat::io {

namespace fs = std::filesystem;
using nlohmann::json;

const char* split_name(Split s) { return s == Split::Train ? "train" : "test"; }

Split parse_split(const std::string& s) {
    if (s == "train") {
        return Split::Train;
    }
    if (s == "test") {
        return Split::Test;
    }
    throw DataError(fmt::format("unknown split '{}'", s));
}

std::vector<CameraView> SceneBundle::views(std::optional<Split> only) const {
    std::vector<CameraView> out;
    for (const auto& c : cameras) {
        if (!only || c.split == *only) {
            out.push_back(c.view);
        }
    }
    return out;
}

void validate(const SceneBundle& bundle) {
    std::set<std::uint32_t> ids;
    for (const auto& c : bundle.cameras) {
        if (!ids.insert(c.image_id).second) {
            throw InvalidParameter(fmt::format("duplicate image_id {}", c.image_id));
        }
        validate(c.view);
    }
}

void write_scene_bundle(const SceneBundle& bundle, const fs::path& dir) {
    validate(bundle);
    fs::create_directories(dir / "sparse" / "0");
    save_ply(bundle.cloud, dir / "cloud.ply");

    std::vector<ColmapImage> images;
    json rows = json::array();
    for (const auto& c : bundle.cameras) {
        images.push_back({c.image_id, static_cast<std::uint32_t>(images.size() + 1), c.name, c.view});
        rows.push_back({{"image_id", c.image_id},
                        {"split", split_name(c.split)},
                        {"image", c.image_present ? json(c.image_path.generic_string()) : json(nullptr)}});
    }
    write_colmap_text(dir / "sparse" / "0", images);
    write_file_atomic(dir / "split.json", json{{"cameras", rows}}.dump(2) + "\n");
}

std::vector<CameraEntry> load_scene_cameras(const fs::path& dir) {
    if (fs::exists(dir / "cameras.txt") || fs::exists(dir / "cameras.bin")) {
        std::vector<CameraEntry> out;
        for (const auto& img : load_colmap(dir)) {
            CameraEntry e;
            e.image_id = img.image_id;
            e.name = img.name;
            e.view = img.view;
            out.push_back(std::move(e));
        }
        return out;
    }
    std::vector<CameraEntry> cameras;
    const fs::path sparse = fs::exists(dir / "sparse" / "0") ? dir / "sparse" / "0" : dir / "sparse";
    const auto images = load_colmap(sparse);

    std::map<std::uint32_t, json> split_rows;
    const bool has_split = fs::exists(dir / "split.json");
    if (has_split) {
        json doc;
        try {
            doc = json::parse(read_file_text(dir / "split.json"));
        } catch (const json::exception& e) {
            throw DataError(fmt::format("split.json: {}", e.what()));
        }
        if (!doc.contains("cameras") || !doc["cameras"].is_array()) {
            throw SchemaError("split.json: missing 'cameras' array");
        }
        for (const auto& row : doc["cameras"]) {
            if (!row.contains("image_id")) {
                throw SchemaError("split.json: camera row without 'image_id'");
            }
            split_rows[row["image_id"].get<std::uint32_t>()] = row;
        }
    }

    for (const auto& img : images) {
        CameraEntry e;
        e.image_id = img.image_id;
        e.name = img.name;
        e.view = img.view;
        if (auto it = split_rows.find(img.image_id); it != split_rows.end()) {
            const json& row = it->second;
            e.split = parse_split(row.value("split", std::string("train")));
            if (row.contains("image") && !row["image"].is_null()) {
                e.image_path = row["image"].get<std::string>();
                e.image_present = true;
            }
        } else if (!has_split) {
            e.image_path = fs::path("images") / img.name;
            e.image_present = fs::exists(dir / e.image_path);
        }
        if (e.image_present && !fs::exists(dir / e.image_path)) {
            throw DataError(fmt::format("image {} for image_id {} does not exist", e.image_path.string(), e.image_id));
        }
        cameras.push_back(std::move(e));
    }
    return cameras;
}

SceneBundle load_scene_bundle(const fs::path& dir) {
    SceneBundle bundle;
    bundle.cloud = load_ply(dir / "cloud.ply");
    bundle.cameras = load_scene_cameras(dir);
    validate(bundle);
    return bundle;
}

} // namespace citysplat::io
