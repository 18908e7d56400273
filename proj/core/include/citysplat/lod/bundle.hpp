#pragma once

#include "citysplat/lod/lod_scene.hpp"

#include <filesystem>
#include <string>

namespace citysplat::lod {

/// On-disk layout:
///   index.json
///   source.ply
///   levels/<L>/blocks/<j>.ply   (L = 0 is the coarsest level)
///
/// index.json holds {intervals, n_mad, dims, p_min, p_max, blocks:[{block_id,
/// bounds:{min,max}|null}], levels:[{level, sh_degree, rate, size,
/// block_sizes}]}. Unbounded interval ends and an infinite n_mad are null.
void save_lod_bundle(const LodScene& scene, const std::filesystem::path& dir);
LodScene load_lod_bundle(const std::filesystem::path& dir);

std::string lod_index_json(const LodScene& scene);

/// Serializes intervals as [[lo, hi], ...] with null for an infinite end.
std::string intervals_json(const DistanceIntervals& intervals);

} // namespace citysplat::lod
