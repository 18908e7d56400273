#include "citysplat/core/errors.hpp"
#include "citysplat/io/atomic_file.hpp"
#include "citysplat/io/ply.hpp"
#include "citysplat/io/synthetic.hpp"
#include "citysplat/metrics/metrics.hpp"
#include "citysplat/partition/assignment.hpp"
#include "citysplat/partition/contraction.hpp"
#include "citysplat/partition/fusion.hpp"
#include "citysplat/partition/grid.hpp"
#include "citysplat/partition/manifest.hpp"
#include "citysplat/render/rasterizer.hpp"

#include "oracles.hpp"
#include "temp_dir.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <cmath>
#include <numeric>
#include <set>

using namespace citysplat;
using namespace citysplat::partition;
using citysplat::testing::TempDir;

namespace {

ContractionMap unit_map() {
    ContractionMap m;
    m.p_min = Eigen::Vector3d(-10, -10, -10);
    m.p_max = Eigen::Vector3d(10, 10, 10);
    return m;
}

// A small city with a handful of cameras, shared by the slower tests.
const io::SceneBundle& small_city() {
    static const io::SceneBundle city = [] {
        io::SyntheticCityOptions o;
        o.seed = 17;
        o.gaussian_budget = 6000;
        o.n_buildings = 10;
        o.n_cameras = 12;
        o.image_width = 96;
        o.image_height = 72;
        return io::generate_synthetic_city(o);
    }();
    return city;
}

std::vector<CameraView> views_of(const io::SceneBundle& b) { return b.views(); }

} // namespace

// ---------------------------------------------------------------- contraction

TEST(Normalize, CornersAndCentre) {
    ContractionMap m;
    m.p_min = {-3, 2, 10};
    m.p_max = {5, 8, 30};
    EXPECT_EQ(normalize_position(m.p_min, m), Eigen::Vector3d(-1, -1, -1));
    EXPECT_EQ(normalize_position(0.5 * (m.p_min + m.p_max), m), Eigen::Vector3d(0, 0, 0));
    EXPECT_EQ(normalize_position(m.p_max, m), Eigen::Vector3d(1, 1, 1));
}

TEST(Normalize, MapValidation) {
    ContractionMap m;
    m.p_min = {0, 0, 0};
    m.p_max = {1, 0, 1};
    EXPECT_THROW(m.validate(), InvalidParameter);
}

TEST(Contract, ClosedFormPoints) {
    EXPECT_EQ(contract({0.5, 0.5, 0.5}), Eigen::Vector3d(0.5, 0.5, 0.5));
    EXPECT_EQ(contract({2, 0, 0}), Eigen::Vector3d(1.5, 0, 0));
    EXPECT_EQ(contract({4, 4, 0}), Eigen::Vector3d(1.75, 1.75, 0));
}

TEST(Contract, IdentityInsideAndBounded) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> inside(-1.0, 1.0);
    std::normal_distribution<double> wide(0.0, 50.0);
    for (int i = 0; i < 10000; ++i) {
        const Eigen::Vector3d p(inside(rng), inside(rng), inside(rng));
        EXPECT_EQ(contract(p), p);
        const Eigen::Vector3d q(wide(rng), wide(rng), wide(rng));
        const Eigen::Vector3d c = contract(q);
        EXPECT_LT(c.cwiseAbs().maxCoeff(), 2.0);
        EXPECT_LT((c - oracle::contract(q)).cwiseAbs().maxCoeff(), 1e-15);
    }
    EXPECT_LE(contract({1e300, -1e300, 0}).cwiseAbs().maxCoeff(), 2.0);
}

TEST(Contract, ContinuousAtUnitBoundary) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n;
    for (int i = 0; i < 1000; ++i) {
        Eigen::Vector3d d(n(rng), n(rng), n(rng));
        d /= d.cwiseAbs().maxCoeff();
        const Eigen::Vector3d in = contract((1.0 - 1e-9) * d);
        const Eigen::Vector3d out = contract((1.0 + 1e-9) * d);
        EXPECT_LT((in - out).cwiseAbs().maxCoeff(), 1e-6);
    }
}

TEST(Contract, NonFiniteRejected) {
    EXPECT_THROW(contract({NAN, 0, 0}), InvalidParameter);
    EXPECT_THROW(contract({0, INFINITY, 0}), InvalidParameter);
}

TEST(ForegroundMap, CentralThirdByDefault) {
    GaussianCloud c;
    for (double x : {0.0, 300.0}) {
        for (double y : {0.0, 90.0}) {
            Gaussian g;
            g.position = {x, y, x / 100.0};
            c.gaussians.push_back(g);
        }
    }
    const ContractionMap m = foreground_map(c, io::RunConfig{});
    EXPECT_NEAR(m.p_min.x(), 100.0, 1e-9);
    EXPECT_NEAR(m.p_max.x(), 200.0, 1e-9);
    EXPECT_NEAR(m.p_min.y(), 30.0, 1e-9);
    EXPECT_NEAR(m.p_max.y(), 60.0, 1e-9);
    EXPECT_NEAR(m.p_min.z(), 0.0, 1e-9);
    EXPECT_NEAR(m.p_max.z(), 3.0, 1e-9);
}

TEST(ForegroundMap, ConfigBoundsWithDataZ) {
    GaussianCloud c;
    c.gaussians.resize(2);
    c[0].position = {0, 0, -4};
    c[1].position = {1, 1, 9};
    const io::RunConfig cfg = io::dataset_preset("rubble");
    const ContractionMap m = foreground_map(c, cfg);
    EXPECT_EQ(m.p_min.x(), -50);
    EXPECT_EQ(m.p_max.x(), 50);
    EXPECT_EQ(m.p_min.z(), -4);
    EXPECT_EQ(m.p_max.z(), 9);
}

// ---------------------------------------------------------------- grid

TEST(Grid, SingleBlockHoldsEverything) {
    std::mt19937_64 rng(3);
    const GaussianCloud c = oracle::random_cloud(rng, 500, 30.0);
    const BlockGrid g = grid_partition(c, unit_map(), {1, 1, 1});
    EXPECT_EQ(g.block_count(), 1u);
    EXPECT_EQ(g.counts[0], 500u);
}

TEST(Grid, LowCornerGoesToFirstBlock) {
    const BlockGrid g = make_grid(unit_map(), {6, 6, 1});
    EXPECT_EQ(g.block_of({-2, -2, 0}), 0u);
    EXPECT_EQ(g.block_of({2, 2, 0}), 35u);
    EXPECT_EQ(g.block_of({-2 + 4.0 / 6, -2, 0}), 1u);
    EXPECT_EQ(g.block_coords(g.block_of({0.1, -0.1, 1.9})), (std::array<int, 3>{3, 2, 0}));
}

TEST(Grid, BlocksTileTheCube) {
    const BlockGrid g = make_grid(unit_map(), {3, 2, 2});
    double vol = 0.0;
    for (const auto& b : g.bounds) {
        vol += (b.max - b.min).prod();
        EXPECT_GE(b.min.minCoeff(), -2.0);
        EXPECT_LE(b.max.maxCoeff(), 2.0);
    }
    EXPECT_NEAR(vol, 64.0, 1e-12);
    EXPECT_EQ(g.bounds.front().min, Eigen::Vector3d::Constant(-2));
    EXPECT_EQ(g.bounds.back().max, Eigen::Vector3d::Constant(2));
}

TEST(Grid, MembershipMatchesBruteForceBinning) {
    std::mt19937_64 rng(4);
    GaussianCloud c = oracle::random_cloud(rng, 5000, 40.0);
    // Points exactly on bin edges.
    for (int k = 0; k <= 6; ++k) {
        Gaussian g;
        g.position = Eigen::Vector3d(-10.0 + 20.0 * k / 6.0, 0.0, 0.0);
        c.gaussians.push_back(g);
    }
    for (const GridDims dims : {GridDims{6, 6, 1}, GridDims{3, 5, 2}, GridDims{7, 1, 3}}) {
        const BlockGrid g = grid_partition(c, unit_map(), dims);
        std::vector<std::size_t> counts(dims.block_count(), 0);
        for (std::size_t i = 0; i < c.size(); ++i) {
            const std::size_t want = oracle::bin_point(oracle::contract(normalize_position(c[i].position, g.map)), dims);
            EXPECT_EQ(g.membership[i], want);
            ++counts[want];
        }
        EXPECT_EQ(g.counts, counts);
        EXPECT_EQ(std::accumulate(g.counts.begin(), g.counts.end(), std::size_t{0}), c.size());
    }
}

TEST(Grid, MembershipIsPartition) {
    std::mt19937_64 rng(5);
    const GaussianCloud c = oracle::random_cloud(rng, 2000, 25.0);
    const BlockGrid g = grid_partition(c, unit_map(), {4, 4, 1});
    std::vector<int> seen(c.size(), 0);
    for (const auto& members : g.members()) {
        for (auto i : members) {
            ++seen[i];
        }
    }
    EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
    for (std::size_t i = 0; i < c.size(); ++i) {
        EXPECT_TRUE(g.in_block(g.membership[i], g.contracted[i]));
    }
}

TEST(Grid, RejectsBadDims) {
    EXPECT_THROW(grid_partition(GaussianCloud{}, unit_map(), {0, 1, 1}), InvalidParameter);
}

TEST(Grid, SplitByBlock) {
    std::mt19937_64 rng(6);
    const GaussianCloud c = oracle::random_cloud(rng, 600, 25.0);
    const BlockGrid g = grid_partition(c, unit_map(), {2, 2, 1});
    const auto parts = split_by_block(c, g);
    ASSERT_EQ(parts.size(), 4u);
    for (std::size_t j = 0; j < 4; ++j) {
        EXPECT_EQ(parts[j].size(), g.counts[j]);
    }
}

// ---------------------------------------------------------------- assignment

TEST(AssignB2, CameraAtBlockCentre) {
    const BlockGrid g = make_grid(unit_map(), {2, 2, 1});
    for (std::size_t j = 0; j < 4; ++j) {
        const Eigen::Vector3d c = g.bounds[j].center();
        // Inside the unit cube contraction is the identity; map back to world.
        const Eigen::Vector3d world = 10.0 * c;
        const CameraView cam = CameraView::look_at(world, world + Eigen::Vector3d(0, 0, -1),
                                                   Eigen::Vector3d::UnitY(), 32, 32, 1.0);
        for (std::size_t k = 0; k < 4; ++k) {
            EXPECT_EQ(assign_b2(cam, k, g), k == j);
        }
    }
}

TEST(AssignB2, ExhaustiveCameraSweep) {
    const BlockGrid g = make_grid(unit_map(), {3, 3, 1});
    for (double x = -40; x <= 40; x += 3.7) {
        for (double y = -40; y <= 40; y += 4.1) {
            const Eigen::Vector3d p(x, y, 5);
            const CameraView cam =
                CameraView::look_at(p, p + Eigen::Vector3d(0, 0, -1), Eigen::Vector3d::UnitY(), 16, 16, 1.0);
            const std::size_t want = oracle::bin_point(oracle::contract(normalize_position(p, g.map)), g.dims);
            std::size_t n = 0;
            for (std::size_t j = 0; j < g.block_count(); ++j) {
                const bool in = assign_b2(cam, j, g);
                n += in;
                EXPECT_EQ(in, j == want);
            }
            EXPECT_EQ(n, 1u);
        }
    }
}

TEST(AssignB1, EmptyBlockNeverContributes) {
    GaussianCloud c;
    std::mt19937_64 rng(15);
    for (int i = 0; i < 300; ++i) {
        Gaussian g = oracle::random_gaussian(rng, 1.0, 0.2, 0.6);
        g.position += Eigen::Vector3d(-8, -8, 0);
        c.gaussians.push_back(g);
    }
    const BlockGrid g = grid_partition(c, unit_map(), {4, 4, 1});
    const std::size_t empty = g.block_index(3, 3, 0);
    ASSERT_EQ(g.counts[empty], 0u);
    AssignmentOptions o;
    o.epsilon = 1e-9;
    for (int k = 0; k < 6; ++k) {
        const Eigen::Vector3d eye(-8.0 + k, -8.0, 6.0);
        const CameraView cam =
            CameraView::look_at(eye, {-8, -8, 0}, Eigen::Vector3d::UnitY(), 64, 48, 1.2);
        EXPECT_FALSE(assign_b1(cam, empty, c, g, o));
        EXPECT_EQ(contribution_loss(c, cam, removal_mask(g, empty, g.bounds[empty], false), o), 0.0);
        EXPECT_TRUE(assign_b1(cam, g.membership[0], c, g, o));
    }
}

TEST(AssignB1, SingleBlockAgainstBackground) {
    const auto& city = small_city();
    const BlockGrid g = grid_partition(city.cloud, foreground_map(city.cloud, io::RunConfig{}), {1, 1, 1});
    const CameraView cam = city.cameras[1].view;
    AssignmentOptions o;
    const CameraView small = cam.downscaled(o.downscale);
    const Image full = render::rasterize(city.cloud, small);
    const Image bg = render::rasterize(GaussianCloud{}, small);
    const double loss = metrics::l_ssim(full, bg);
    ASSERT_GT(loss, 0.01);
    ASSERT_LT(loss + 1e-6, 1.0);
    o.epsilon = loss - 1e-6;
    EXPECT_TRUE(assign_b1(cam, 0, city.cloud, g, o)) << loss;
    o.epsilon = loss + 1e-6;
    EXPECT_FALSE(assign_b1(cam, 0, city.cloud, g, o)) << loss;
}

TEST(Assign, MatrixEqualsIndependentPredicates) {
    const auto& city = small_city();
    const BlockGrid g = grid_partition(city.cloud, foreground_map(city.cloud, io::RunConfig{}), {2, 2, 1});
    AssignmentOptions o;
    o.min_count = 1;
    const auto poses = views_of(city);
    const AssignmentMatrix m = assign(poses, g, city.cloud, o);
    ASSERT_EQ(m.n_poses, poses.size());
    for (std::size_t i = 0; i < poses.size(); ++i) {
        bool any = false;
        for (std::size_t j = 0; j < 4; ++j) {
            const bool b1 = assign_b1(poses[i], j, city.cloud, g, o);
            const bool b2 = assign_b2(poses[i], j, g);
            EXPECT_EQ(m.b1[i * 4 + j] != 0, b1) << i << "," << j;
            EXPECT_EQ(m.b2[i * 4 + j] != 0, b2);
            EXPECT_EQ(m.at(i, j), b1 || b2);
            EXPECT_EQ(m.provenance(i, j), static_cast<Provenance>((b1 ? kB1 : 0) | (b2 ? kB2 : 0)));
            any = any || m.at(i, j);
        }
        EXPECT_TRUE(any) << "pose " << i << " unassigned";
        EXPECT_TRUE(m.unassignable[i].empty());
    }
}

TEST(Assign, ProvenanceNames) {
    EXPECT_STREQ(provenance_name(kB1), "B1");
    EXPECT_STREQ(provenance_name(kB2), "B2");
    EXPECT_STREQ(provenance_name(kBoth), "both");
    EXPECT_STREQ(provenance_name(kNone), "none");
}

TEST(Assign, OptionsValidated) {
    AssignmentOptions o;
    o.epsilon = 1.0;
    EXPECT_THROW(o.validate(), InvalidParameter);
    o = {};
    o.downscale = 0;
    EXPECT_THROW(o.validate(), InvalidParameter);
}

TEST(Enlarge, UnchangedWhenPopulated) {
    std::mt19937_64 rng(7);
    const GaussianCloud c = oracle::random_cloud(rng, 400, 5.0);
    const BlockGrid g = grid_partition(c, unit_map(), {1, 1, 1});
    const EnlargeResult r = enlarge_bounds(0, g, 400);
    EXPECT_EQ(r.steps, 0);
    EXPECT_EQ(r.bounds.min, g.bounds[0].min);
    EXPECT_EQ(r.bounds.max, g.bounds[0].max);
    EXPECT_THROW(enlarge_bounds(0, g, 0), InvalidParameter);
}

TEST(Enlarge, EmptyBlockGrowsUntilItTouchesCluster) {
    // One tight cluster in the far corner of block 0 of a 4x4 grid.
    GaussianCloud c;
    std::mt19937_64 rng(8);
    std::normal_distribution<double> n(0.0, 0.2);
    for (int i = 0; i < 200; ++i) {
        Gaussian g;
        g.position = Eigen::Vector3d(-8 + n(rng), -8 + n(rng), n(rng));
        c.gaussians.push_back(g);
    }
    const BlockGrid g = grid_partition(c, unit_map(), {4, 4, 1});
    const std::size_t j = g.block_index(3, 2, 0);
    ASSERT_EQ(g.counts[j], 0u);
    const EnlargeResult r = enlarge_bounds(j, g, 1);
    ASSERT_GT(r.steps, 0);
    EXPECT_GE(r.contained, 1u);
    EXPECT_FALSE(r.saturated);
    EXPECT_TRUE(r.bounds.contains_box(g.bounds[j]));

    // Replay the growth: every step contains the previous one, and the step
    // before the last holds nothing.
    const Eigen::Vector3d centre = g.bounds[j].center();
    Eigen::Vector3d half = 0.5 * (g.bounds[j].max - g.bounds[j].min);
    Bounds3 prev = g.bounds[j];
    for (int s = 1; s <= r.steps; ++s) {
        half *= 1.2;
        Bounds3 next;
        next.min = (centre - half).cwiseMax(Eigen::Vector3d::Constant(-2)).cwiseMin(prev.min);
        next.max = (centre + half).cwiseMin(Eigen::Vector3d::Constant(2)).cwiseMax(prev.max);
        EXPECT_TRUE(next.contains_box(prev));
        std::size_t inside = 0;
        for (const auto& p : g.contracted) {
            inside += next.contains_closed(p);
        }
        EXPECT_EQ(inside > 0, s == r.steps);
        prev = next;
    }
    EXPECT_EQ(prev.min, r.bounds.min);
    EXPECT_EQ(prev.max, r.bounds.max);
}

TEST(Enlarge, SaturatesWhenCloudTooSmall) {
    std::mt19937_64 rng(9);
    const GaussianCloud c = oracle::random_cloud(rng, 30, 5.0);
    const BlockGrid g = grid_partition(c, unit_map(), {2, 2, 1});
    const EnlargeResult r = enlarge_bounds(0, g, 1000);
    EXPECT_TRUE(r.saturated);
    EXPECT_EQ(r.bounds.min, Eigen::Vector3d::Constant(-2));
    EXPECT_EQ(r.bounds.max, Eigen::Vector3d::Constant(2));
    EXPECT_EQ(r.contained, 30u);
}

TEST(Enlarge, NeverChangesMembership) {
    const auto& city = small_city();
    const BlockGrid g = grid_partition(city.cloud, foreground_map(city.cloud, io::RunConfig{}), {3, 3, 1});
    const BlockGrid before = g;
    AssignmentOptions o;
    o.min_count = city.cloud.size();
    const AssignmentMatrix m = assign({city.cameras[0].view}, g, city.cloud, o);
    EXPECT_EQ(g.membership, before.membership);
    EXPECT_EQ(g.counts, before.counts);
    for (std::size_t j = 0; j < g.block_count(); ++j) {
        EXPECT_TRUE(m.enlarged[j]);
        EXPECT_TRUE(m.assignment_bounds[j].contains_box(g.bounds[j]));
    }
}

// ---------------------------------------------------------------- manifests

TEST(Manifest, JsonRoundTrip) {
    BlockManifest m;
    m.block_id = 3;
    m.bounds_contracted = {{-2, 0, -2}, {0, 2, 2}};
    m.bounds_world = Bounds3{{1, 2, 3}, {4, 5, 6}};
    m.assignment_bounds = {{-2.4, -0.4, -2}, {0.4, 2, 2}};
    m.gaussian_indices = {4, 9, 11};
    m.image_ids = {2, 5};
    m.assignments = {{2, kB1, 0.07}, {5, kBoth, 0.3}};
    const auto doc = nlohmann::json::parse(manifest_to_json(m));
    for (const char* key : {"block_id", "bounds_contracted", "bounds_world", "gaussian_indices", "image_ids",
                            "hyperparameters"}) {
        EXPECT_TRUE(doc.contains(key)) << key;
    }
    EXPECT_DOUBLE_EQ(doc["hyperparameters"]["pos_lr_scale"].get<double>(), 0.4);
    EXPECT_DOUBLE_EQ(doc["hyperparameters"]["scale_lr_scale"].get<double>(), 0.8);
    const BlockManifest back = manifest_from_json(manifest_to_json(m));
    EXPECT_EQ(back.block_id, 3u);
    EXPECT_EQ(back.gaussian_indices, m.gaussian_indices);
    EXPECT_EQ(back.image_ids, m.image_ids);
    EXPECT_EQ(back.bounds_world->max, m.bounds_world->max);
    EXPECT_EQ(back.assignments[1].rule, kBoth);
    EXPECT_THROW(manifest_from_json(R"({"block_id": 1})"), SchemaError);
}

TEST(Manifest, SingleBlockListsAllAssignedPoses) {
    const auto& city = small_city();
    const BlockGrid g = grid_partition(city.cloud, foreground_map(city.cloud, io::RunConfig{}), {1, 1, 1});
    AssignmentOptions o;
    o.min_count = 1;
    const AssignmentMatrix m = assign(views_of(city), g, city.cloud, o);
    std::vector<std::uint32_t> ids;
    for (const auto& c : city.cameras) {
        ids.push_back(c.image_id);
    }
    const auto manifests = build_manifests(g, m, ids, city.cloud, io::RunConfig{});
    ASSERT_EQ(manifests.size(), 1u);
    std::vector<std::uint32_t> want;
    for (std::size_t i : m.poses_of(0)) {
        want.push_back(ids[i]);
    }
    EXPECT_EQ(manifests[0].image_ids, want);
    EXPECT_EQ(manifests[0].gaussian_indices.size(), city.cloud.size());
}

TEST(Manifest, ExportImportReconstructsAssignment) {
    const auto& city = small_city();
    const BlockGrid g = grid_partition(city.cloud, foreground_map(city.cloud, io::RunConfig{}), {2, 2, 1});
    AssignmentOptions o;
    o.min_count = 2000;
    const auto poses = views_of(city);
    const AssignmentMatrix m = assign(poses, g, city.cloud, o);
    std::vector<std::uint32_t> ids;
    for (const auto& c : city.cameras) {
        ids.push_back(c.image_id);
    }
    TempDir dir;
    export_manifests(g, m, ids, city.cloud, io::RunConfig{}, dir.path());
    EXPECT_TRUE(std::filesystem::exists(dir / "grid.json"));
    EXPECT_TRUE(std::filesystem::exists(dir.path() / "blocks" / "block_3.json"));

    const ImportedPartition imp = import_manifests(dir.path());
    EXPECT_EQ(imp.image_ids, ids);
    EXPECT_EQ(imp.grid.membership, g.membership);
    EXPECT_EQ(imp.grid.counts, g.counts);
    EXPECT_EQ(imp.assignment.b1, m.b1);
    EXPECT_EQ(imp.assignment.b2, m.b2);
    for (std::size_t j = 0; j < 4; ++j) {
        EXPECT_EQ(imp.assignment.assignment_bounds[j].min, m.assignment_bounds[j].min);
        EXPECT_EQ(imp.assignment.enlarged[j], m.enlarged[j]);
    }

    // Manifests partition the Gaussian indices.
    std::vector<int> seen(city.cloud.size(), 0);
    for (const auto& man : imp.manifests) {
        for (auto i : man.gaussian_indices) {
            ++seen[i];
        }
    }
    EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
}

TEST(Manifest, OverlappingIndicesRejectedOnImport) {
    const auto& city = small_city();
    const BlockGrid g = grid_partition(city.cloud, foreground_map(city.cloud, io::RunConfig{}), {2, 1, 1});
    AssignmentOptions o;
    o.min_count = 1;
    const AssignmentMatrix m = assign({city.cameras[0].view}, g, city.cloud, o);
    TempDir dir;
    export_manifests(g, m, {city.cameras[0].image_id}, city.cloud, io::RunConfig{}, dir.path());
    const auto p0 = dir.path() / "blocks" / "block_0.json";
    const auto p1 = dir.path() / "blocks" / "block_1.json";
    BlockManifest a = manifest_from_json(io::read_file_text(p0));
    const BlockManifest b = manifest_from_json(io::read_file_text(p1));
    a.gaussian_indices.push_back(b.gaussian_indices.front());
    io::write_file_atomic(p0, manifest_to_json(a));
    EXPECT_THROW(import_manifests(dir.path()), DataError);
}

TEST(GridFile, RoundTrip) {
    std::mt19937_64 rng(10);
    const GaussianCloud c = oracle::random_cloud(rng, 300, 20.0);
    const BlockGrid g = grid_partition(c, unit_map(), {3, 2, 1});
    std::vector<std::uint32_t> ids{5, 6, 7};
    std::vector<std::uint32_t> back_ids;
    const BlockGrid back = grid_from_json(grid_to_json(g, ids), &back_ids);
    EXPECT_EQ(back_ids, ids);
    EXPECT_EQ(back.dims, g.dims);
    EXPECT_EQ(back.map.p_min, g.map.p_min);
    EXPECT_EQ(back.counts, g.counts);
    for (std::size_t j = 0; j < g.block_count(); ++j) {
        EXPECT_EQ(back.bounds[j].min, g.bounds[j].min);
        EXPECT_EQ(back.bounds[j].max, g.bounds[j].max);
    }
}

// ---------------------------------------------------------------- fusion

TEST(Fuse, SingleBlockIsIdentity) {
    std::mt19937_64 rng(11);
    const GaussianCloud c = oracle::random_cloud(rng, 300, 50.0);
    const BlockGrid g = grid_partition(c, unit_map(), {1, 1, 1});
    const std::vector<BlockCloud> in{{c, 0}};
    EXPECT_EQ(io::encode_ply(fuse(in, g)), io::encode_ply(c));
}

TEST(Fuse, StraysDropped) {
    std::mt19937_64 rng(12);
    const GaussianCloud c = oracle::random_cloud(rng, 1000, 20.0);
    const BlockGrid g = grid_partition(c, unit_map(), {2, 1, 1});
    // Each block gets the whole cloud: half of it strays into the other block.
    const std::vector<BlockCloud> in{{c, 0}, {c, 1}};
    const GaussianCloud f = fuse(in, g);
    std::size_t want = 0;
    for (std::size_t j = 0; j < 2; ++j) {
        for (const auto& gs : c.gaussians) {
            const Eigen::Vector3d p = oracle::contract(normalize_position(gs.position, g.map));
            want += oracle::bin_point(p, g.dims) == j;
        }
    }
    EXPECT_EQ(f.size(), want);
    EXPECT_EQ(f.size(), c.size());
    EXPECT_TRUE(oracle::same_multiset(f, c));
}

TEST(Fuse, PartitionThenFuseIsMultisetIdentity) {
    std::mt19937_64 rng(13);
    const GaussianCloud c = oracle::random_cloud(rng, 3000, 30.0);
    const BlockGrid g = grid_partition(c, unit_map(), {3, 3, 1});
    const auto parts = split_by_block(c, g);
    std::vector<BlockCloud> in;
    for (std::size_t j = parts.size(); j-- > 0;) {
        in.push_back({parts[j], j});
    }
    const GaussianCloud f = fuse(in, g);
    EXPECT_TRUE(oracle::same_multiset(f, c));
    EXPECT_EQ(f.sh_degree, c.sh_degree);
}

TEST(Fuse, OutputShDegreeIsMaxOfInputs) {
    std::mt19937_64 rng(14);
    GaussianCloud a = oracle::random_cloud(rng, 10, 5.0);
    a.sh_degree = 1;
    GaussianCloud b = oracle::random_cloud(rng, 10, 5.0);
    b.sh_degree = 2;
    const BlockGrid g = grid_partition(a, unit_map(), {1, 1, 1});
    const std::vector<BlockCloud> in{{a, 0}, {b, 0}};
    EXPECT_EQ(fuse(in, g).sh_degree, 2);
}
