#include "doctest.h"

#include <algorithm>

#include "pcreg/geometry.hpp"
#include "pcreg/kdtree.hpp"
#include "test_util.hpp"

using namespace pcreg;
using namespace pcreg::testutil;

TEST_CASE("point cloud construction enforces invariants") {
    CHECK_THROWS_AS(PointCloud(std::vector<Vec3>{}), std::invalid_argument);
    CHECK_THROWS_AS(PointCloud({{0.0, 0.0, std::numeric_limits<double>::quiet_NaN()}}),
                    std::invalid_argument);
    const PointCloud c({{1.0, 2.0, 3.0}});
    CHECK(c.size() == 1);
}

TEST_CASE("nearest on a single-point cloud always returns index 0") {
    const PointCloud cloud({{5.0, -3.0, 2.0}});
    const NeighborIndex index(cloud);
    Rng rng(7);
    for (int i = 0; i < 10; ++i) CHECK(index.nearest(rng.uniform_vec3(-50, 50)) == 0);
}

TEST_CASE("nearest picks the closer of two points") {
    const PointCloud cloud({{0.0, 0.0, 0.0}, {10.0, 0.0, 0.0}});
    const NeighborIndex index(cloud);
    CHECK(index.nearest({1.0, 0.0, 0.0}) == 0);
    CHECK(index.nearest({9.0, 0.0, 0.0}) == 1);
    // Equidistant query: lowest index wins.
    CHECK(index.nearest({5.0, 0.0, 0.0}) == 0);
}

TEST_CASE("nearest matches the exhaustive scan on a random 512-point cloud") {
    Rng rng(101);
    const PointCloud cloud = random_cloud(512, rng);
    const NeighborIndex index(cloud);
    for (int i = 0; i < 200; ++i) {
        const Vec3 q = rng.uniform_vec3(-120, 120);
        CHECK(index.nearest(q) == brute_nearest(cloud, q));
    }
    // Queries at the points themselves are exact hits.
    for (std::size_t i = 0; i < cloud.size(); ++i) CHECK(index.nearest(cloud[i]) == i);
}

TEST_CASE("k-nearest returns min(k, N) indices sorted by distance, ties by index") {
    Rng rng(11);
    const PointCloud cloud = random_cloud(64, rng);
    const NeighborIndex index(cloud);

    const Vec3 q = rng.uniform_vec3(-50, 50);
    const auto got = index.query(q, 10);
    REQUIRE(got.size() == 10);

    std::vector<std::size_t> order(cloud.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double da = squared_distance(cloud[a], q), db = squared_distance(cloud[b], q);
        if (da != db) return da < db;
        return a < b;
    });
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == order[i]);

    CHECK(index.query(q, 1000).size() == cloud.size());

    // Duplicate points: ties must resolve to the lowest index.
    const PointCloud dup({{1.0, 1.0, 1.0}, {1.0, 1.0, 1.0}, {1.0, 1.0, 1.0}, {4.0, 0.0, 0.0}});
    const auto tied = NeighborIndex(dup).query({1.0, 1.0, 1.0}, 3);
    CHECK(tied == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("radius queries agree with a linear scan") {
    Rng rng(23);
    const PointCloud cloud = random_cloud(256, rng);
    const NeighborIndex index(cloud);
    for (int rep = 0; rep < 20; ++rep) {
        const Vec3 q = rng.uniform_vec3(-100, 100);
        const double r = rng.uniform(5.0, 60.0);
        std::vector<std::size_t> expected;
        for (std::size_t i = 0; i < cloud.size(); ++i)
            if (squared_distance(cloud[i], q) <= r * r) expected.push_back(i);
        CHECK(index.within(q, r) == expected);
        CHECK(index.count_within(q, r) == expected.size());
    }
}

TEST_CASE("chamfer distance of a cloud with itself is exactly zero") {
    Rng rng(3);
    const PointCloud cloud = random_cloud(100, rng);
    CHECK(chamfer_distance(cloud, cloud) == 0.0);
}

TEST_CASE("chamfer distance on tiny hand-checked clouds") {
    const PointCloud x({{0.0, 0.0, 0.0}});
    const PointCloud y({{1.0, 0.0, 0.0}});
    CHECK(chamfer_distance(x, y) == doctest::Approx(2.0).epsilon(1e-12));

    const PointCloud a({{0.0, 0.0, 0.0}, {2.0, 0.0, 0.0}});
    const PointCloud b({{0.0, 0.0, 0.0}});
    CHECK(chamfer_distance(a, b) == doctest::Approx(brute_chamfer(a, b)).epsilon(1e-12));
    CHECK(brute_chamfer(a, b) == 4.0);
}

TEST_CASE("chamfer is symmetric and matches brute force on random pairs") {
    Rng rng(17);
    for (int rep = 0; rep < 25; ++rep) {
        const PointCloud x = random_cloud(1 + rng.uniform_index(300), rng);
        const PointCloud y = random_cloud(1 + rng.uniform_index(300), rng);
        const double dxy = chamfer_distance(x, y);
        const double dyx = chamfer_distance(y, x);
        CHECK(close_rel(dxy, dyx, 1e-9));
        CHECK(close_rel(dxy, brute_chamfer(x, y), 1e-9));
        CHECK(dxy >= 0.0);
    }
}

TEST_CASE("gaussian interpolation with a single source copies its vector") {
    const PointCloud src({{1.0, 2.0, 3.0}});
    const DisplacementField val({{4.0, -5.0, 6.0}});
    Rng rng(5);
    const PointCloud targets = random_cloud(20, rng);
    const DisplacementField out = gaussian_interpolate(src, val, targets, 5.0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        CHECK(out[i].x == doctest::Approx(4.0).epsilon(1e-12));
        CHECK(out[i].y == doctest::Approx(-5.0).epsilon(1e-12));
        CHECK(out[i].z == doctest::Approx(6.0).epsilon(1e-12));
    }
}

TEST_CASE("gaussian interpolation averages equidistant sources") {
    const PointCloud src({{-1.0, 0.0, 0.0}, {1.0, 0.0, 0.0}});
    const DisplacementField val({{2.0, 0.0, 4.0}, {0.0, 6.0, -2.0}});
    const PointCloud target({{0.0, 5.0, 0.0}});
    const DisplacementField out = gaussian_interpolate(src, val, target, 3.0);
    CHECK(out[0].x == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(out[0].y == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(out[0].z == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("gaussian interpolation matches the direct formula") {
    const PointCloud src({{0.0, 0.0, 0.0}, {7.0, 1.0, -2.0}, {-3.0, 4.0, 5.0}});
    const DisplacementField val({{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}});
    const Vec3 target{2.0, 1.5, 0.5};
    const double sigma = 4.0;

    Vec3 num{0, 0, 0};
    double den = 0.0;
    for (std::size_t i = 0; i < src.size(); ++i) {
        const double w = std::exp(-squared_distance(target, src[i]) / (2.0 * sigma * sigma));
        num += val[i] * w;
        den += w;
    }
    const Vec3 expected = num / den;

    const DisplacementField out = gaussian_interpolate(src, val, PointCloud({target}), sigma);
    CHECK(out[0].x == doctest::Approx(expected.x).epsilon(1e-9));
    CHECK(out[0].y == doctest::Approx(expected.y).epsilon(1e-9));
    CHECK(out[0].z == doctest::Approx(expected.z).epsilon(1e-9));
}

TEST_CASE("gaussian interpolation: sigma -> 0 limit reproduces source vectors") {
    Rng rng(29);
    const PointCloud src = random_cloud(20, rng, 50.0);
    const DisplacementField val = random_field(20, rng);

    double min_pair = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < src.size(); ++i)
        for (std::size_t j = i + 1; j < src.size(); ++j)
            min_pair = std::min(min_pair, norm(src[i] - src[j]));

    const double sigma = 1e-3 * min_pair;
    const DisplacementField out = gaussian_interpolate(src, val, src, sigma);
    for (std::size_t i = 0; i < src.size(); ++i) {
        CHECK(close_rel(out[i].x, val[i].x, 1e-6));
        CHECK(close_rel(out[i].y, val[i].y, 1e-6));
        CHECK(close_rel(out[i].z, val[i].z, 1e-6));
    }
}

TEST_CASE("gaussian interpolation output is a convex combination of source vectors") {
    Rng rng(31);
    const PointCloud src = random_cloud(32, rng, 40.0);
    const DisplacementField val = random_field(32, rng);
    const PointCloud targets = random_cloud(64, rng, 400.0);  // includes far extrapolation

    Vec3 lo = val[0], hi = val[0];
    for (const Vec3& v : val) {
        for (int a = 0; a < 3; ++a) {
            lo[a] = std::min(lo[a], v[a]);
            hi[a] = std::max(hi[a], v[a]);
        }
    }
    const DisplacementField out = gaussian_interpolate(src, val, targets, 2.0);
    for (const Vec3& v : out) {
        for (int a = 0; a < 3; ++a) {
            CHECK(v[a] >= lo[a] - 1e-12);
            CHECK(v[a] <= hi[a] + 1e-12);
        }
        CHECK(v.finite());
    }
}

TEST_CASE("rasterized uniform field fills every voxel with the same vector") {
    Rng rng(41);
    const PointCloud cloud = random_cloud(50, rng, 30.0);
    const Vec3 v{1.5, -2.5, 0.25};
    const DisplacementField field(std::vector<Vec3>(cloud.size(), v));
    const VectorGrid grid = rasterize_displacement(cloud, field, 8.0, 5.0);
    REQUIRE(grid.data.size() == grid.voxel_count());
    for (const Vec3& g : grid.data) {
        CHECK(g.x == doctest::Approx(v.x).epsilon(1e-12));
        CHECK(g.y == doctest::Approx(v.y).epsilon(1e-12));
        CHECK(g.z == doctest::Approx(v.z).epsilon(1e-12));
    }

    const VectorGrid zero = rasterize_displacement(
        cloud, DisplacementField::zeros(cloud.size()), 8.0, 5.0);
    for (const Vec3& g : zero.data) CHECK(squared_norm(g) == 0.0);
}

TEST_CASE("rasterization matches per-voxel interpolation of a random sparse field") {
    Rng rng(43);
    const PointCloud cloud = random_cloud(40, rng, 25.0);
    const DisplacementField field = random_field(40, rng);
    const double spacing = 10.0, sigma = 5.0;
    const VectorGrid grid = rasterize_displacement(cloud, field, spacing, sigma);

    for (std::int64_t iz = 0; iz < grid.dims[2]; iz += 2) {
        for (std::int64_t iy = 0; iy < grid.dims[1]; iy += 2) {
            for (std::int64_t ix = 0; ix < grid.dims[0]; ix += 2) {
                const DisplacementField one = gaussian_interpolate(
                    cloud, field, PointCloud({grid.center(ix, iy, iz)}), sigma);
                const Vec3& g = grid.at(ix, iy, iz);
                CHECK(g.x == one[0].x);
                CHECK(g.y == one[0].y);
                CHECK(g.z == one[0].z);
            }
        }
    }
}

TEST_CASE("rasterization of a single point still produces a covering grid") {
    const PointCloud cloud({{3.0, 3.0, 3.0}});
    const DisplacementField field({{1.0, 0.0, 0.0}});
    const VectorGrid grid = rasterize_displacement(cloud, field, 50.0, 1.0);
    for (int a = 0; a < 3; ++a) CHECK(grid.dims[a] >= 1);
    CHECK(grid.data.size() == grid.voxel_count());
}
