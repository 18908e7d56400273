#include "citysplat/partition/grid.hpp"

#include "citysplat/core/errors.hpp"
#include "citysplat/core/parallel.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace citysplat::partition {

namespace {

double edge(int k, int n) { return k == n ? 2.0 : -2.0 + 4.0 * k / n; }

int bin_axis(double c, int n) {
    int i = static_cast<int>(std::floor((c + 2.0) * n / 4.0));
    i = std::clamp(i, 0, n - 1);
    while (i > 0 && c < edge(i, n)) {
        --i;
    }
    while (i < n - 1 && c >= edge(i + 1, n)) {
        ++i;
    }
    return i;
}

} // namespace

std::size_t BlockGrid::block_index(int ix, int iy, int iz) const {
    return static_cast<std::size_t>(ix) + static_cast<std::size_t>(dims.nx) * iy +
           static_cast<std::size_t>(dims.nx) * dims.ny * iz;
}

std::array<int, 3> BlockGrid::block_coords(std::size_t j) const {
    const int ix = static_cast<int>(j % dims.nx);
    const int iy = static_cast<int>((j / dims.nx) % dims.ny);
    const int iz = static_cast<int>(j / (static_cast<std::size_t>(dims.nx) * dims.ny));
    return {ix, iy, iz};
}

std::size_t BlockGrid::block_of(const Eigen::Vector3d& c) const {
    return block_index(bin_axis(c.x(), dims.nx), bin_axis(c.y(), dims.ny), bin_axis(c.z(), dims.nz));
}

bool BlockGrid::in_block(std::size_t j, const Eigen::Vector3d& c) const {
    const auto ijk = block_coords(j);
    const Bounds3& b = bounds[j];
    for (int a = 0; a < 3; ++a) {
        if (c[a] < b.min[a]) {
            return false;
        }
        const bool top = ijk[a] == dims.axis(a) - 1;
        if (top ? c[a] > b.max[a] : c[a] >= b.max[a]) {
            return false;
        }
    }
    return true;
}

std::vector<std::vector<std::uint32_t>> BlockGrid::members() const {
    std::vector<std::vector<std::uint32_t>> out(block_count());
    for (std::size_t i = 0; i < membership.size(); ++i) {
        out[membership[i]].push_back(static_cast<std::uint32_t>(i));
    }
    return out;
}

BlockGrid make_grid(const ContractionMap& map, const GridDims& dims) {
    if (dims.nx < 1 || dims.ny < 1 || dims.nz < 1) {
        throw InvalidParameter(fmt::format("block dims must be >= 1, got {}x{}x{}", dims.nx, dims.ny, dims.nz));
    }
    map.validate();
    BlockGrid grid;
    grid.map = map;
    grid.dims = dims;
    grid.bounds.resize(dims.block_count());
    grid.counts.assign(dims.block_count(), 0);
    for (std::size_t j = 0; j < grid.bounds.size(); ++j) {
        const auto ijk = grid.block_coords(j);
        for (int a = 0; a < 3; ++a) {
            grid.bounds[j].min[a] = edge(ijk[a], dims.axis(a));
            grid.bounds[j].max[a] = edge(ijk[a] + 1, dims.axis(a));
        }
    }
    return grid;
}

BlockGrid grid_partition(const GaussianCloud& cloud, const ContractionMap& map, const GridDims& dims) {
    BlockGrid grid = make_grid(map, dims);
    const std::size_t n = cloud.size();
    grid.contracted.resize(n);
    grid.membership.resize(n);
    constexpr std::size_t kChunk = 8192;
    parallel_for((n + kChunk - 1) / kChunk, [&](std::size_t c) {
        const std::size_t end = std::min(n, (c + 1) * kChunk);
        for (std::size_t i = c * kChunk; i < end; ++i) {
            grid.contracted[i] = contract_world(cloud[i].position, map);
            grid.membership[i] = static_cast<std::uint32_t>(grid.block_of(grid.contracted[i]));
        }
    });
    for (std::uint32_t j : grid.membership) {
        ++grid.counts[j];
    }
    return grid;
}

std::vector<GaussianCloud> split_by_block(const GaussianCloud& cloud, const BlockGrid& grid) {
    if (grid.membership.size() != cloud.size()) {
        throw InvalidParameter("grid membership does not match the cloud");
    }
    std::vector<GaussianCloud> out(grid.block_count());
    for (auto& c : out) {
        c.sh_degree = cloud.sh_degree;
    }
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        out[grid.membership[i]].gaussians.push_back(cloud[i]);
    }
    return out;
}

} // namespace citysplat::partition
