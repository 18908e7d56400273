#include "citysplat/lod/bundle.hpp"

#include "citysplat/core/errors.hpp"
#include "citysplat/io/atomic_file.hpp"
#include "citysplat/io/config.hpp"
#include "citysplat/io/ply.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <cmath>

namespace citysplat::lod {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json number_or_null(double v) { return std::isinf(v) ? json(nullptr) : json(v); }

json vec_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

Eigen::Vector3d vec_from(const json& j) {
    if (!j.is_array() || j.size() != 3) {
        throw SchemaError("index.json: expected a 3-vector");
    }
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json intervals_doc(const DistanceIntervals& iv) {
    json out = json::array();
    for (const auto& [lo, hi] : iv.ranges) {
        out.push_back(json::array({lo, number_or_null(hi)}));
    }
    return out;
}

fs::path block_path(const fs::path& dir, std::size_t level, std::size_t block) {
    return dir / "levels" / std::to_string(level) / "blocks" / fmt::format("{}.ply", block);
}

const json& require(const json& doc, const char* key) {
    if (!doc.is_object() || !doc.contains(key)) {
        throw SchemaError(fmt::format("index.json: missing field '{}'", key));
    }
    return doc.at(key);
}

} // namespace

std::string intervals_json(const DistanceIntervals& intervals) { return intervals_doc(intervals).dump(); }

std::string lod_index_json(const LodScene& scene) {
    json blocks = json::array();
    for (std::size_t j = 0; j < scene.block_count(); ++j) {
        const auto& b = scene.block_bounds[j];
        blocks.push_back({{"block_id", j},
                          {"bounds", b ? json{{"min", vec_json(b->min)}, {"max", vec_json(b->max)}} : json(nullptr)}});
    }
    json levels = json::array();
    for (std::size_t l = 0; l < scene.level_count(); ++l) {
        const LodLevel& level = scene.levels[l];
        std::vector<std::size_t> sizes;
        for (const auto& b : level.blocks) {
            sizes.push_back(b.size());
        }
        levels.push_back({{"level", l},
                          {"sh_degree", level.sh_degree},
                          {"rate", level.rate},
                          {"size", level.size()},
                          {"block_sizes", sizes}});
    }
    json doc = {{"intervals", intervals_doc(scene.intervals)},
                {"n_mad", number_or_null(scene.n_mad)},
                {"dims", {scene.dims.nx, scene.dims.ny, scene.dims.nz}},
                {"p_min", vec_json(scene.map.p_min)},
                {"p_max", vec_json(scene.map.p_max)},
                {"source_size", scene.source.size()},
                {"blocks", blocks},
                {"levels", levels}};
    return doc.dump(2) + "\n";
}

void save_lod_bundle(const LodScene& scene, const fs::path& dir) {
    scene.validate();
    for (std::size_t l = 0; l < scene.level_count(); ++l) {
        fs::create_directories(dir / "levels" / std::to_string(l) / "blocks");
        for (std::size_t j = 0; j < scene.block_count(); ++j) {
            io::save_ply(scene.levels[l].blocks[j], block_path(dir, l, j));
        }
    }
    io::save_ply(scene.source, dir / "source.ply");
    io::write_file_atomic(dir / "index.json", lod_index_json(scene));
}

LodScene load_lod_bundle(const fs::path& dir) {
    if (!fs::exists(dir / "index.json")) {
        throw DataError(fmt::format("{} is not a LoD bundle (no index.json)", dir.string()));
    }
    json doc;
    try {
        doc = json::parse(io::read_file_text(dir / "index.json"));
    } catch (const json::exception& e) {
        throw DataError(fmt::format("index.json: {}", e.what()));
    }
    LodScene scene;
    try {
        scene.intervals = io::parse_intervals(require(doc, "intervals").dump());
        const json& n_mad = require(doc, "n_mad");
        scene.n_mad = n_mad.is_null() ? kInfinity : n_mad.get<double>();
        const auto d = require(doc, "dims").get<std::vector<int>>();
        if (d.size() != 3) {
            throw SchemaError("index.json: dims must have 3 entries");
        }
        scene.dims = {d[0], d[1], d[2]};
        if (doc.contains("p_min") && doc.contains("p_max")) {
            scene.map.p_min = vec_from(doc["p_min"]);
            scene.map.p_max = vec_from(doc["p_max"]);
        }
        for (const auto& b : require(doc, "blocks")) {
            const json& bounds = require(b, "bounds");
            if (bounds.is_null()) {
                scene.block_bounds.emplace_back(std::nullopt);
            } else {
                scene.block_bounds.emplace_back(Bounds3{vec_from(require(bounds, "min")), vec_from(require(bounds, "max"))});
            }
        }
        for (const auto& lv : require(doc, "levels")) {
            LodLevel level;
            level.sh_degree = require(lv, "sh_degree").get<int>();
            level.rate = require(lv, "rate").get<double>();
            scene.levels.push_back(std::move(level));
        }
    } catch (const json::exception& e) {
        throw SchemaError(fmt::format("index.json: {}", e.what()));
    } catch (const ConfigError& e) {
        throw DataError(fmt::format("index.json: {}", e.what()));
    }
    for (std::size_t l = 0; l < scene.level_count(); ++l) {
        for (std::size_t j = 0; j < scene.block_count(); ++j) {
            GaussianCloud c = io::load_ply(block_path(dir, l, j));
            c.sh_degree = std::min(c.sh_degree, scene.levels[l].sh_degree);
            scene.levels[l].blocks.push_back(std::move(c));
        }
    }
    scene.source = io::load_ply(dir / "source.ply");
    try {
        scene.validate();
    } catch (const Error& e) {
        throw DataError(fmt::format("{}: {}", dir.string(), e.what()));
    }
    return scene;
}

} // namespace citysplat::lod
