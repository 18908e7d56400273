#include "citysplat/partition/fusion.hpp"

#include "citysplat/core/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <numeric>

namespace citysplat::partition {

GaussianCloud fuse(std::span<const BlockCloud> block_clouds, const BlockGrid& grid) {
    std::vector<std::size_t> order(block_clouds.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return block_clouds[a].block < block_clouds[b].block; });

    GaussianCloud out;
    out.sh_degree = 0;
    for (const auto& bc : block_clouds) {
        if (bc.block >= grid.block_count()) {
            throw InvalidParameter(fmt::format("block {} out of range for a {}-block grid", bc.block,
                                               grid.block_count()));
        }
        out.sh_degree = std::max(out.sh_degree, bc.cloud.sh_degree);
    }
    if (block_clouds.empty()) {
        out.sh_degree = kMaxShDegree;
    }
    for (std::size_t k : order) {
        const BlockCloud& bc = block_clouds[k];
        for (const auto& g : bc.cloud.gaussians) {
            if (grid.in_block(bc.block, contract_world(g.position, grid.map))) {
                out.gaussians.push_back(g);
            }
        }
    }
    return out;
}

} // namespace citysplat::partition
