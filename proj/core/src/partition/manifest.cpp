#include "citysplat/partition/manifest.hpp"

#include "citysplat/core/errors.hpp"
#include "citysplat/io/atomic_file.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace citysplat::partition {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json vec_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

json bounds_json(const Bounds3& b) { return {{"min", vec_json(b.min)}, {"max", vec_json(b.max)}}; }

const json& require(const json& doc, const char* key, const std::string& where) {
    if (!doc.is_object() || !doc.contains(key)) {
        throw SchemaError(fmt::format("{}: missing field '{}'", where, key));
    }
    return doc.at(key);
}

Eigen::Vector3d vec_from(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 3) {
        throw SchemaError(fmt::format("{}: expected a 3-vector", where));
    }
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Bounds3 bounds_from(const json& j, const std::string& where) {
    return {vec_from(require(j, "min", where), where + ".min"), vec_from(require(j, "max", where), where + ".max")};
}

json parse_or_throw(const std::string& text, const std::string& where) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(fmt::format("{}: {}", where, e.what()));
    }
}

Provenance parse_rule(const std::string& s) {
    if (s == "B1") {
        return kB1;
    }
    if (s == "B2") {
        return kB2;
    }
    if (s == "both") {
        return kBoth;
    }
    throw SchemaError(fmt::format("unknown assignment rule '{}'", s));
}

} // namespace

std::string manifest_to_json(const BlockManifest& m) {
    json assignments = json::array();
    for (const auto& a : m.assignments) {
        assignments.push_back({{"image_id", a.image_id},
                               {"rule", provenance_name(a.rule)},
                               {"l_ssim", std::isnan(a.l_ssim) ? json(nullptr) : json(a.l_ssim)}});
    }
    json doc = {
        {"block_id", m.block_id},
        {"bounds_contracted", bounds_json(m.bounds_contracted)},
        {"bounds_world", m.bounds_world ? bounds_json(*m.bounds_world) : json(nullptr)},
        {"assignment_bounds", bounds_json(m.assignment_bounds)},
        {"gaussian_indices", m.gaussian_indices},
        {"image_ids", m.image_ids},
        {"assignments", assignments},
        {"hyperparameters",
         {{"pos_lr_scale", m.hyperparameters.pos_lr_scale},
          {"scale_lr_scale", m.hyperparameters.scale_lr_scale},
          {"iterations", m.hyperparameters.iterations}}},
    };
    return doc.dump(2) + "\n";
}

BlockManifest manifest_from_json(const std::string& text) {
    const json doc = parse_or_throw(text, "manifest");
    const std::string where = "manifest";
    BlockManifest m;
    try {
        m.block_id = require(doc, "block_id", where).get<std::size_t>();
        m.bounds_contracted = bounds_from(require(doc, "bounds_contracted", where), "bounds_contracted");
        const json& world = require(doc, "bounds_world", where);
        if (!world.is_null()) {
            m.bounds_world = bounds_from(world, "bounds_world");
        }
        m.assignment_bounds = doc.contains("assignment_bounds")
                                  ? bounds_from(doc["assignment_bounds"], "assignment_bounds")
                                  : m.bounds_contracted;
        m.gaussian_indices = require(doc, "gaussian_indices", where).get<std::vector<std::uint32_t>>();
        m.image_ids = require(doc, "image_ids", where).get<std::vector<std::uint32_t>>();
        if (doc.contains("assignments")) {
            for (const auto& a : doc["assignments"]) {
                ManifestAssignment ma;
                ma.image_id = require(a, "image_id", "assignment").get<std::uint32_t>();
                ma.rule = parse_rule(require(a, "rule", "assignment").get<std::string>());
                const json& l = a.value("l_ssim", json(nullptr));
                ma.l_ssim = l.is_null() ? std::numeric_limits<double>::quiet_NaN() : l.get<double>();
                m.assignments.push_back(ma);
            }
        } else {
            for (std::uint32_t id : m.image_ids) {
                m.assignments.push_back({id, kB1, std::numeric_limits<double>::quiet_NaN()});
            }
        }
        const json& hp = require(doc, "hyperparameters", where);
        m.hyperparameters.pos_lr_scale = require(hp, "pos_lr_scale", "hyperparameters").get<double>();
        m.hyperparameters.scale_lr_scale = require(hp, "scale_lr_scale", "hyperparameters").get<double>();
        m.hyperparameters.iterations = require(hp, "iterations", "hyperparameters").get<int>();
    } catch (const json::exception& e) {
        throw SchemaError(fmt::format("manifest: {}", e.what()));
    }
    return m;
}

std::vector<BlockManifest> build_manifests(const BlockGrid& grid, const AssignmentMatrix& assignment,
                                           const std::vector<std::uint32_t>& image_ids, const GaussianCloud& cloud,
                                           const io::RunConfig& config) {
    if (image_ids.size() != assignment.n_poses || assignment.n_blocks != grid.block_count()) {
        throw InvalidParameter("assignment matrix does not match the grid or image list");
    }
    if (grid.membership.size() != cloud.size()) {
        throw InvalidParameter("grid membership does not match the cloud");
    }
    const auto members = grid.members();
    std::vector<BlockManifest> out;
    for (std::size_t j = 0; j < grid.block_count(); ++j) {
        BlockManifest m;
        m.block_id = j;
        m.bounds_contracted = grid.bounds[j];
        m.assignment_bounds = assignment.assignment_bounds.empty() ? grid.bounds[j] : assignment.assignment_bounds[j];
        m.gaussian_indices = members[j];
        if (!members[j].empty()) {
            Bounds3 w{Eigen::Vector3d::Constant(kInfinity), Eigen::Vector3d::Constant(-kInfinity)};
            for (std::uint32_t i : members[j]) {
                w.min = w.min.cwiseMin(cloud[i].position);
                w.max = w.max.cwiseMax(cloud[i].position);
            }
            m.bounds_world = w;
        }
        for (std::size_t i = 0; i < assignment.n_poses; ++i) {
            if (assignment.at(i, j)) {
                m.image_ids.push_back(image_ids[i]);
                m.assignments.push_back(
                    {image_ids[i], assignment.provenance(i, j), assignment.loss[i * assignment.n_blocks + j]});
            }
        }
        m.hyperparameters.iterations = config.finetune_iterations;
        out.push_back(std::move(m));
    }
    return out;
}

std::string grid_to_json(const BlockGrid& grid, const std::vector<std::uint32_t>& image_ids) {
    json bounds = json::array();
    for (const auto& b : grid.bounds) {
        bounds.push_back(bounds_json(b));
    }
    json doc = {{"p_min", vec_json(grid.map.p_min)},
                {"p_max", vec_json(grid.map.p_max)},
                {"dims", {grid.dims.nx, grid.dims.ny, grid.dims.nz}},
                {"bounds", bounds},
                {"counts", grid.counts},
                {"image_ids", image_ids}};
    return doc.dump(2) + "\n";
}

BlockGrid grid_from_json(const std::string& text, std::vector<std::uint32_t>* image_ids) {
    const json doc = parse_or_throw(text, "grid");
    try {
        ContractionMap map;
        map.p_min = vec_from(require(doc, "p_min", "grid"), "p_min");
        map.p_max = vec_from(require(doc, "p_max", "grid"), "p_max");
        const auto d = require(doc, "dims", "grid").get<std::vector<int>>();
        if (d.size() < 2 || d.size() > 3) {
            throw SchemaError("grid: dims must have 2 or 3 entries");
        }
        BlockGrid grid = make_grid(map, {d[0], d[1], d.size() == 3 ? d[2] : 1});
        if (doc.contains("counts")) {
            grid.counts = doc["counts"].get<std::vector<std::size_t>>();
            if (grid.counts.size() != grid.block_count()) {
                throw SchemaError("grid: counts length differs from the block count");
            }
        }
        if (image_ids != nullptr) {
            *image_ids = doc.value("image_ids", std::vector<std::uint32_t>{});
        }
        return grid;
    } catch (const InvalidParameter& e) {
        throw DataError(fmt::format("grid: {}", e.what()));
    } catch (const json::exception& e) {
        throw SchemaError(fmt::format("grid: {}", e.what()));
    }
}

void save_grid(const BlockGrid& grid, const std::vector<std::uint32_t>& image_ids, const fs::path& path) {
    io::write_file_atomic(path, grid_to_json(grid, image_ids));
}

BlockGrid load_grid(const fs::path& path, std::vector<std::uint32_t>* image_ids) {
    return grid_from_json(io::read_file_text(path), image_ids);
}

void export_manifests(const BlockGrid& grid, const AssignmentMatrix& assignment,
                      const std::vector<std::uint32_t>& image_ids, const GaussianCloud& cloud,
                      const io::RunConfig& config, const fs::path& out_dir) {
    const auto manifests = build_manifests(grid, assignment, image_ids, cloud, config);
    fs::create_directories(out_dir / "blocks");
    for (const auto& m : manifests) {
        io::write_file_atomic(out_dir / "blocks" / fmt::format("block_{}.json", m.block_id), manifest_to_json(m));
    }
    save_grid(grid, image_ids, out_dir / "grid.json");
}

ImportedPartition import_manifests(const fs::path& dir) {
    ImportedPartition out;
    out.grid = load_grid(dir / "grid.json", &out.image_ids);
    const std::size_t n_blocks = out.grid.block_count();
    std::size_t total = 0;
    for (std::size_t j = 0; j < n_blocks; ++j) {
        const fs::path p = dir / "blocks" / fmt::format("block_{}.json", j);
        if (!fs::exists(p)) {
            throw DataError(fmt::format("missing manifest {}", p.string()));
        }
        out.manifests.push_back(manifest_from_json(io::read_file_text(p)));
        if (out.manifests.back().block_id != j) {
            throw DataError(fmt::format("{} declares block_id {}", p.string(), out.manifests.back().block_id));
        }
        total += out.manifests.back().gaussian_indices.size();
    }

    out.grid.membership.assign(total, std::numeric_limits<std::uint32_t>::max());
    out.grid.counts.assign(n_blocks, 0);
    for (const auto& m : out.manifests) {
        for (std::uint32_t i : m.gaussian_indices) {
            if (i >= total || out.grid.membership[i] != std::numeric_limits<std::uint32_t>::max()) {
                throw DataError(fmt::format("manifests do not partition the Gaussian indices (index {})", i));
            }
            out.grid.membership[i] = static_cast<std::uint32_t>(m.block_id);
        }
        out.grid.counts[m.block_id] = m.gaussian_indices.size();
    }

    std::map<std::uint32_t, std::size_t> pose_of;
    for (std::size_t i = 0; i < out.image_ids.size(); ++i) {
        pose_of[out.image_ids[i]] = i;
    }
    AssignmentMatrix& a = out.assignment;
    a.n_poses = out.image_ids.size();
    a.n_blocks = n_blocks;
    a.b1.assign(a.n_poses * n_blocks, 0);
    a.b2.assign(a.n_poses * n_blocks, 0);
    a.loss.assign(a.n_poses * n_blocks, std::numeric_limits<double>::quiet_NaN());
    a.unassignable.assign(a.n_poses, {});
    a.enlarged.assign(n_blocks, 0);
    for (const auto& m : out.manifests) {
        a.assignment_bounds.push_back(m.assignment_bounds);
        a.enlarged[m.block_id] = !(m.assignment_bounds.min == m.bounds_contracted.min &&
                                   m.assignment_bounds.max == m.bounds_contracted.max);
        for (const auto& as : m.assignments) {
            const auto it = pose_of.find(as.image_id);
            if (it == pose_of.end()) {
                throw DataError(fmt::format("block {} references unknown image_id {}", m.block_id, as.image_id));
            }
            const std::size_t k = it->second * n_blocks + m.block_id;
            a.b1[k] = (as.rule & kB1) != 0;
            a.b2[k] = (as.rule & kB2) != 0;
            a.loss[k] = as.l_ssim;
        }
    }
    return out;
}

} // namespace citysplat::partition
