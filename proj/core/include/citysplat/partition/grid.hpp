#pragma once

#include "citysplat/partition/contraction.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace citysplat::partition {

/// Uniform grid over the contracted cube [-2,2]^3. Block j has coordinates
/// (ix, iy, iz) with j = ix + nx*iy + nx*ny*iz. A point belongs to a block
/// when lo <= c < hi on every axis, except that the topmost block of an axis
/// also takes c == hi (= 2).
struct BlockGrid {
    ContractionMap map;
    GridDims dims;
    std::vector<Bounds3> bounds;               ///< contracted space, per block
    std::vector<std::uint32_t> membership;     ///< block per Gaussian
    std::vector<std::size_t> counts;           ///< K_j
    std::vector<Eigen::Vector3d> contracted;   ///< contracted position per Gaussian

    std::size_t block_count() const { return bounds.size(); }
    std::size_t block_index(int ix, int iy, int iz) const;
    std::array<int, 3> block_coords(std::size_t j) const;

    /// Block containing a contracted point. Points outside [-2,2] are clamped
    /// into the edge blocks.
    std::size_t block_of(const Eigen::Vector3d& c) const;
    bool in_block(std::size_t j, const Eigen::Vector3d& c) const;

    /// Member indices of every block, ascending.
    std::vector<std::vector<std::uint32_t>> members() const;
};

/// Grid geometry without any membership.
BlockGrid make_grid(const ContractionMap& map, const GridDims& dims);

/// Throws InvalidParameter for dims < 1 on any axis or an invalid map.
BlockGrid grid_partition(const GaussianCloud& cloud, const ContractionMap& map, const GridDims& dims);

/// The members of each block as separate clouds (block order, source order within).
std::vector<GaussianCloud> split_by_block(const GaussianCloud& cloud, const BlockGrid& grid);

} // namespace citysplat::partition
