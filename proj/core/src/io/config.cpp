#include "citysplat/io/config.hpp"

#include "citysplat/core/errors.hpp"
#include "citysplat/io/atomic_file.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>

namespace citysplat::io {

using nlohmann::json;

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

double number_or_infinity(const json& v, const std::string& key) {
    if (v.is_null()) {
        return kInfinity;
    }
    if (v.is_string()) {
        const std::string s = lower(v.get<std::string>());
        if (s == "inf" || s == "infinity" || s == "+inf") {
            return kInfinity;
        }
        throw ConfigError(fmt::format("{}: '{}' is not a number", key, s));
    }
    if (!v.is_number()) {
        throw ConfigError(fmt::format("{}: expected a number", key));
    }
    return v.get<double>();
}

double number(const json& v, const std::string& key) {
    if (!v.is_number()) {
        throw ConfigError(fmt::format("{}: expected a number", key));
    }
    return v.get<double>();
}

DistanceIntervals intervals_from_json(const json& v, const std::string& key) {
    if (!v.is_array()) {
        throw ConfigError(fmt::format("{}: expected an array of [lo, hi] pairs", key));
    }
    DistanceIntervals out;
    for (const auto& pair : v) {
        if (!pair.is_array() || pair.size() != 2) {
            throw ConfigError(fmt::format("{}: each interval must be a [lo, hi] pair", key));
        }
        out.ranges.emplace_back(number(pair[0], key), number_or_infinity(pair[1], key));
    }
    return out;
}

Eigen::Vector3d vec_from_json(const json& v, const std::string& key, bool& has_z) {
    if (!v.is_array() || (v.size() != 2 && v.size() != 3)) {
        throw ConfigError(fmt::format("{}: expected [x, y] or [x, y, z]", key));
    }
    has_z = v.size() == 3;
    return {number(v[0], key), number(v[1], key), has_z ? number(v[2], key) : 0.0};
}

json intervals_to_json(const DistanceIntervals& intervals) {
    json arr = json::array();
    for (const auto& [lo, hi] : intervals.ranges) {
        arr.push_back(json::array({lo, std::isinf(hi) ? json(nullptr) : json(hi)}));
    }
    return arr;
}

RunConfig make_preset(double xmin, double ymin, double xmax, double ymax, GridDims dims, double eps,
                      std::initializer_list<double> edges, std::vector<double> rates, std::string name) {
    RunConfig c;
    c.dataset = std::move(name);
    ForegroundBounds fg;
    // Some published rows list y_min > y_max; the box is the same either way.
    fg.min = {std::min(xmin, xmax), std::min(ymin, ymax), 0.0};
    fg.max = {std::max(xmin, xmax), std::max(ymin, ymax), 0.0};
    fg.z_from_data = true;
    c.foreground = fg;
    c.block_dims = dims;
    c.ssim_threshold = eps;
    c.distance_intervals = DistanceIntervals::from_edges(edges);
    c.compression_rates = std::move(rates);
    return c;
}

} // namespace

void RunConfig::validate() const {
    if (foreground) {
        const Eigen::Vector3d lo = foreground->min;
        const Eigen::Vector3d hi = foreground->max;
        const int axes = foreground->z_from_data ? 2 : 3;
        for (int a = 0; a < axes; ++a) {
            if (!(std::isfinite(lo[a]) && std::isfinite(hi[a]) && hi[a] > lo[a])) {
                throw ConfigError("foreground_max must exceed foreground_min on every axis");
            }
        }
    }
    if (block_dims.nx < 1 || block_dims.ny < 1 || block_dims.nz < 1) {
        throw ConfigError("block_dims entries must be >= 1");
    }
    if (!(ssim_threshold > 0.0 && ssim_threshold < 1.0)) {
        throw ConfigError(fmt::format("ssim_threshold {} outside (0,1)", ssim_threshold));
    }
    if (!(n_mad > 0.0)) {
        throw ConfigError("n_mad must be positive");
    }
    distance_intervals.validate();
    if (compression_rates.empty()) {
        throw ConfigError("compression_rates must not be empty");
    }
    for (std::size_t i = 0; i < compression_rates.size(); ++i) {
        const double r = compression_rates[i];
        if (!(r > 0.0 && r <= 1.0)) {
            throw ConfigError(fmt::format("compression rate {} outside (0,1]", r));
        }
        if (i > 0 && !(r < compression_rates[i - 1])) {
            throw ConfigError("compression_rates must be strictly descending");
        }
    }
    if (lod_sh_degrees.size() != compression_rates.size()) {
        throw ConfigError("lod_sh_degrees needs one entry per compression rate");
    }
    for (int d : lod_sh_degrees) {
        if (d < 0 || d > kMaxShDegree) {
            throw ConfigError(fmt::format("lod SH degree {} outside 0..3", d));
        }
    }
    if (distance_intervals.size() != compression_rates.size()) {
        throw ConfigError(fmt::format("{} distance intervals but {} detail levels", distance_intervals.size(),
                                      compression_rates.size()));
    }
    if (!(loss_lambda >= 0.0 && loss_lambda <= 1.0)) {
        throw ConfigError("loss_lambda must lie in [0,1]");
    }
    if (assignment_downscale < 1) {
        throw ConfigError("assignment_downscale must be >= 1");
    }
    if (min_block_count < 1) {
        throw ConfigError("min_block_count must be >= 1");
    }
    if (!background.allFinite() || (background.array() < 0.0f).any() || (background.array() > 1.0f).any()) {
        throw ConfigError("background channels must lie in [0,1]");
    }
}

RunConfig dataset_preset(std::string_view dataset) {
    const std::string name = lower(dataset);
    const std::vector<double> city_rates{0.5, 0.34, 0.25};
    const std::vector<double> real_rates{0.6, 0.5, 0.4};
    if (name == "matrixcity") {
        return make_preset(-350, -400, 450, 200, {6, 6, 1}, 0.05, {200, 400}, city_rates, name);
    }
    if (name == "rubble") {
        return make_preset(-50, -5, 50, -135, {3, 3, 1}, 0.12, {100, 200}, real_rates, name);
    }
    if (name == "building") {
        return make_preset(-140, 250, -10, 0, {5, 4, 1}, 0.1, {100, 200}, real_rates, name);
    }
    if (name == "residence") {
        return make_preset(-270, -25, 60, 175, {5, 4, 1}, 0.08, {250, 500}, real_rates, name);
    }
    if (name == "sciart" || name == "sci-art") {
        return make_preset(-205, -110, 90, 55, {3, 3, 1}, 0.05, {250, 500}, real_rates, "sciart");
    }
    throw ConfigError(fmt::format("unknown dataset preset '{}'", dataset));
}

RunConfig parse_config(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(fmt::format("config is not valid JSON: {}", e.what()));
    }
    if (!doc.is_object()) {
        throw ConfigError("config must be a JSON object");
    }

    RunConfig c;
    if (doc.contains("dataset")) {
        if (!doc["dataset"].is_string()) {
            throw ConfigError("dataset: expected a string");
        }
        c = dataset_preset(doc["dataset"].get<std::string>());
    }

    bool has_min = false, has_max = false;
    bool min_z = false, max_z = false;
    Eigen::Vector3d fg_min, fg_max;
    for (const auto& [key, v] : doc.items()) {
        if (key == "dataset") {
            continue;
        } else if (key == "foreground_min") {
            fg_min = vec_from_json(v, key, min_z);
            has_min = true;
        } else if (key == "foreground_max") {
            fg_max = vec_from_json(v, key, max_z);
            has_max = true;
        } else if (key == "block_dims") {
            if (!v.is_array() || (v.size() != 2 && v.size() != 3)) {
                throw ConfigError("block_dims: expected [nx, ny] or [nx, ny, nz]");
            }
            for (const auto& e : v) {
                if (!e.is_number_integer()) {
                    throw ConfigError("block_dims: entries must be integers");
                }
            }
            c.block_dims = {v[0].get<int>(), v[1].get<int>(), v.size() == 3 ? v[2].get<int>() : 1};
        } else if (key == "ssim_threshold") {
            c.ssim_threshold = number(v, key);
        } else if (key == "n_mad") {
            c.n_mad = number_or_infinity(v, key);
        } else if (key == "distance_intervals") {
            c.distance_intervals = intervals_from_json(v, key);
        } else if (key == "compression_rates") {
            if (!v.is_array()) {
                throw ConfigError("compression_rates: expected an array");
            }
            c.compression_rates.clear();
            for (const auto& e : v) {
                c.compression_rates.push_back(number(e, key));
            }
        } else if (key == "loss_lambda") {
            c.loss_lambda = number(v, key);
        } else if (key == "lod_sh_degrees") {
            if (!v.is_array()) {
                throw ConfigError("lod_sh_degrees: expected an array");
            }
            c.lod_sh_degrees.clear();
            for (const auto& e : v) {
                if (!e.is_number_integer()) {
                    throw ConfigError("lod_sh_degrees: entries must be integers");
                }
                c.lod_sh_degrees.push_back(e.get<int>());
            }
        } else if (key == "assignment_downscale") {
            if (!v.is_number_integer()) {
                throw ConfigError("assignment_downscale: expected an integer");
            }
            c.assignment_downscale = v.get<int>();
        } else if (key == "min_block_count") {
            if (!v.is_number_integer() || v.get<long long>() < 1) {
                throw ConfigError("min_block_count: expected a positive integer");
            }
            c.min_block_count = v.get<std::size_t>();
        } else if (key == "finetune_iterations") {
            if (!v.is_number_integer()) {
                throw ConfigError("finetune_iterations: expected an integer");
            }
            c.finetune_iterations = v.get<int>();
        } else if (key == "background") {
            bool unused = false;
            c.background = vec_from_json(v, key, unused).cast<float>();
            if (!unused) {
                throw ConfigError("background: expected [r, g, b]");
            }
        } else {
            throw ConfigError(fmt::format("unknown config key '{}'", key));
        }
    }
    if (has_min != has_max) {
        throw ConfigError("foreground_min and foreground_max must be given together");
    }
    if (has_min) {
        if (min_z != max_z) {
            throw ConfigError("foreground_min and foreground_max must have the same dimension");
        }
        c.foreground = ForegroundBounds{fg_min, fg_max, !min_z};
    }
    c.validate();
    return c;
}

RunConfig load_config(const std::filesystem::path& path) { return parse_config(read_file_text(path)); }

std::string dump_config(const RunConfig& c) {
    json doc;
    if (!c.dataset.empty()) {
        doc["dataset"] = c.dataset;
    }
    if (c.foreground) {
        const auto& fg = *c.foreground;
        if (fg.z_from_data) {
            doc["foreground_min"] = {fg.min.x(), fg.min.y()};
            doc["foreground_max"] = {fg.max.x(), fg.max.y()};
        } else {
            doc["foreground_min"] = {fg.min.x(), fg.min.y(), fg.min.z()};
            doc["foreground_max"] = {fg.max.x(), fg.max.y(), fg.max.z()};
        }
    }
    if (c.block_dims.nz == 1) {
        doc["block_dims"] = {c.block_dims.nx, c.block_dims.ny};
    } else {
        doc["block_dims"] = {c.block_dims.nx, c.block_dims.ny, c.block_dims.nz};
    }
    doc["ssim_threshold"] = c.ssim_threshold;
    doc["n_mad"] = std::isinf(c.n_mad) ? json("inf") : json(c.n_mad);
    doc["distance_intervals"] = intervals_to_json(c.distance_intervals);
    doc["compression_rates"] = c.compression_rates;
    doc["loss_lambda"] = c.loss_lambda;
    doc["lod_sh_degrees"] = c.lod_sh_degrees;
    doc["assignment_downscale"] = c.assignment_downscale;
    doc["min_block_count"] = c.min_block_count;
    doc["finetune_iterations"] = c.finetune_iterations;
    doc["background"] = {c.background.x(), c.background.y(), c.background.z()};
    return doc.dump(2) + "\n";
}

DistanceIntervals parse_intervals(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(fmt::format("intervals are not valid JSON: {}", e.what()));
    }
    auto intervals = intervals_from_json(doc, "distance_intervals");
    intervals.validate();
    return intervals;
}

} // namespace citysplat::io
