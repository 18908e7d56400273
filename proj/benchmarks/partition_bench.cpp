#include "citysplat/io/synthetic.hpp"
#include "citysplat/partition/assignment.hpp"
#include "citysplat/partition/contraction.hpp"
#include "citysplat/partition/grid.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace citysplat;

namespace {

const io::SceneBundle& city() {
    static const io::SceneBundle s = [] {
        io::SyntheticCityOptions o;
        o.seed = 12;
        o.gaussian_budget = 50000;
        o.n_cameras = 16;
        return io::generate_synthetic_city(o);
    }();
    return s;
}

void BM_Contract(benchmark::State& state) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0.0, 3.0);
    std::vector<Eigen::Vector3d> pts(4096);
    for (auto& p : pts) {
        p = {n(rng), n(rng), n(rng)};
    }
    for (auto _ : state) {
        for (const auto& p : pts) {
            benchmark::DoNotOptimize(partition::contract(p));
        }
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(pts.size()));
}
BENCHMARK(BM_Contract);

void BM_GridPartition(benchmark::State& state) {
    const auto& c = city();
    const auto map = partition::foreground_map(c.cloud, io::RunConfig{});
    const GridDims dims{static_cast<int>(state.range(0)), static_cast<int>(state.range(0)), 1};
    for (auto _ : state) {
        const auto grid = partition::grid_partition(c.cloud, map, dims);
        benchmark::DoNotOptimize(grid.counts.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c.cloud.size()));
}
BENCHMARK(BM_GridPartition)->Arg(2)->Arg(6)->Unit(benchmark::kMillisecond);

void BM_Assign(benchmark::State& state) {
    const auto& c = city();
    const auto grid = partition::grid_partition(c.cloud, partition::foreground_map(c.cloud, io::RunConfig{}), {2, 2, 1});
    const auto views = c.views();
    partition::AssignmentOptions opts;
    opts.min_count = 1000;
    for (auto _ : state) {
        const auto m = partition::assign(views, grid, c.cloud, opts);
        benchmark::DoNotOptimize(m.b1.data());
    }
    state.counters["poses"] = static_cast<double>(views.size());
}
BENCHMARK(BM_Assign)->Unit(benchmark::kMillisecond);

} // namespace
