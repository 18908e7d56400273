#pragma once

#include "citysplat/partition/grid.hpp"

#include <span>

namespace citysplat::partition {

/// A cloud produced for one block, e.g. by fine-tuning that block.
struct BlockCloud {
    GaussianCloud cloud;
    std::size_t block = 0;
};

/// Keeps from each block cloud the Gaussians whose contracted position lies
/// in that block's bounds and concatenates the survivors in block order
/// (input order among clouds of the same block). The result carries the
/// highest SH degree of the inputs.
GaussianCloud fuse(std::span<const BlockCloud> block_clouds, const BlockGrid& grid);

} // namespace citysplat::partition
