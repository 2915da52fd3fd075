// Copyright Contributors to the mvrecon Project
// SPDX-License-Identifier: Apache-2.0
//
#include "mvrecon/error.hpp"
#include "mvrecon/grid.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace mvr;

namespace {

// Analytic silhouette of a sphere: a pixel is foreground iff the ray through its
// center passes within `radius` of `center`.
Mask sphere_mask(const Camera& cam, const Vec3& center, double radius) {
    Mask m(cam.width(), cam.height());
    const Vec3 o = cam.position();
    for (int y = 0; y < cam.height(); ++y)
        for (int x = 0; x < cam.width(); ++x) {
            const Vec3 d = cam.ray_direction(Vec2(x + 0.5, y + 0.5));
            const double t = (center - o).dot(d);
            m.set(x, y, t > 0.0 && (o + t * d - center).norm() <= radius);
        }
    return m;
}

OrbitConfig rig(int n, int res) {
    OrbitConfig cfg;
    cfg.n_views = n;
    cfg.resolution = res;
    return cfg;
}

struct SphereViews {
    std::vector<Camera> cams;
    std::vector<Mask> masks;
};

SphereViews sphere_views(int n, int res, double radius = 0.4) {
    SphereViews v;
    v.cams = orbit_cameras(rig(n, res));
    for (const auto& c : v.cams)
        v.masks.push_back(sphere_mask(c, Vec3::Zero(), radius));
    return v;
}

// Brute-force carving written against the plain pinhole equations.
VoxelGrid carve_oracle(const std::vector<Camera>& cams, const std::vector<Mask>& masks, int r) {
    VoxelGrid g(r, Aabb{});
    const double h = 1.0 / r;
    for (int k = 0; k < r; ++k)
        for (int j = 0; j < r; ++j)
            for (int i = 0; i < r; ++i) {
                const Vec3 p(-0.5 + (i + 0.5) * h, -0.5 + (j + 0.5) * h, -0.5 + (k + 0.5) * h);
                bool keep = true;
                for (std::size_t v = 0; v < cams.size() && keep; ++v) {
                    const Vec3 q = cams[v].world_to_camera().apply(p);
                    if (q.z() <= 1e-4) {
                        keep = false;
                        break;
                    }
                    const double u = cams[v].fx() * q.x() / q.z() + cams[v].cx();
                    const double w = cams[v].fy() * q.y() / q.z() + cams[v].cy();
                    const int px = static_cast<int>(std::floor(u)), py = static_cast<int>(std::floor(w));
                    keep = px >= 0 && py >= 0 && px < cams[v].width() && py < cams[v].height() && masks[v].at(px, py);
                }
                g.set(i, j, k, keep);
            }
    return g;
}

TriMesh unit_cube_mesh() {
    TriMesh m;
    for (int c = 0; c < 8; ++c)
        m.vertices.emplace_back(c & 1, (c >> 1) & 1, (c >> 2) & 1);
    m.faces = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
               {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
    return m;
}

} // namespace

TEST(Grid, FullForegroundKeepsEveryCell) {
    const auto cams = orbit_cameras(rig(18, 64));
    std::vector<Mask> masks(cams.size(), Mask(64, 64, true));
    const VoxelGrid g = carve(cams, masks, 16);
    EXPECT_EQ(g.occupied_count(), g.cell_count());
}

TEST(Grid, OneBackgroundViewEmptiesTheHull) {
    const auto cams = orbit_cameras(rig(18, 64));
    std::vector<Mask> masks(cams.size(), Mask(64, 64, true));
    masks[7] = Mask(64, 64, false);
    EXPECT_EQ(carve(cams, masks, 16).occupied_count(), 0u);
}

TEST(Grid, CarveRejectsBadInput) {
    EXPECT_THROW(carve({}, {}, 16), InputError);
    const auto cams = orbit_cameras(rig(2, 32));
    std::vector<Mask> masks(2, Mask(16, 16, true));
    EXPECT_THROW(carve(cams, masks, 16), InputError);
    EXPECT_THROW(VoxelGrid(1, Aabb{}), InputError);
}

TEST(Grid, CarveMatchesBruteForceOracle) {
    const auto v = sphere_views(18, 96);
    const VoxelGrid g = carve(v.cams, v.masks, 40);
    EXPECT_TRUE(g == carve_oracle(v.cams, v.masks, 40));
}

TEST(Grid, SphereHullVolume) {
    const auto v = sphere_views(18, 256);
    const VoxelGrid g = carve(v.cams, v.masks, 64);
    const double vs = 4.0 / 3.0 * std::numbers::pi * 0.4 * 0.4 * 0.4;
    EXPECT_GT(g.occupied_volume(), 0.98 * vs);
    EXPECT_LT(g.occupied_volume(), 1.08 * vs);
}

TEST(Grid, CarvingIsMonotoneInViews) {
    const auto v = sphere_views(18, 64);
    std::vector<Camera> cams;
    std::vector<Mask> masks;
    VoxelGrid prev(24, Aabb{});
    for (std::size_t k = 0; k < v.cams.size(); ++k) {
        cams.push_back(v.cams[k]);
        masks.push_back(v.masks[k]);
        const VoxelGrid g = carve(cams, masks, 24);
        if (k > 0)
            for (std::size_t idx = 0; idx < g.cell_count(); ++idx)
                ASSERT_FALSE(g.occupied(idx) && !prev.occupied(idx)) << "view " << k << " added cell " << idx;
        prev = g;
    }
}

TEST(Grid, CarvingIsOrderInvariant) {
    auto v = sphere_views(18, 64);
    const VoxelGrid a = carve(v.cams, v.masks, 32);
    std::vector<std::size_t> perm(v.cams.size());
    for (std::size_t i = 0; i < perm.size(); ++i)
        perm[i] = i;
    std::mt19937_64 rng(3);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Camera> cams;
    std::vector<Mask> masks;
    for (auto p : perm) {
        cams.push_back(v.cams[p]);
        masks.push_back(v.masks[p]);
    }
    EXPECT_TRUE(a == carve(cams, masks, 32));
}

TEST(Grid, HullContainsTheTrueSurface) {
    const auto v = sphere_views(18, 256);
    const VoxelGrid g = carve(v.cams, v.masks, 64);
    const double diag = g.voxel_size().norm();
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n01;
    for (int s = 0; s < 2000; ++s) {
        const Vec3 p = 0.4 * Vec3(n01(rng), n01(rng), n01(rng)).normalized();
        double best = 1e9;
        for (int k = 0; k < 64; ++k)
            for (int j = 0; j < 64; ++j)
                for (int i = 0; i < 64; ++i)
                    if (g.occupied(i, j, k))
                        best = std::min(best, (g.cell_center(i, j, k) - p).squaredNorm());
        ASSERT_LE(std::sqrt(best), diag);
        if (s == 200)
            break; // exhaustive scan is slow; 200 samples suffice for a unit test
    }
}

TEST(MarchingCubes, SingleCellIsASphereTopologically) {
    VoxelGrid g(4, Aabb{});
    g.set(1, 2, 1, true);
    const TriMesh m = marching_cubes(g, {0.5, false});
    const TopologyReport t = analyze_topology(m);
    EXPECT_TRUE(t.watertight());
    EXPECT_EQ(t.misoriented_edges, 0u);
    EXPECT_EQ(t.euler_characteristic(), 2);
    EXPECT_GT(m.signed_volume(), 0.0);
}

TEST(MarchingCubes, EmptyGridThrows) {
    EXPECT_THROW(marching_cubes(VoxelGrid(8, Aabb{})), InputError);
}

TEST(MarchingCubes, FullGridApproximatesTheBox) {
    VoxelGrid g(64, Aabb{});
    for (std::size_t i = 0; i < g.cell_count(); ++i)
        g.set(i, true);
    const TriMesh m = marching_cubes(g);
    EXPECT_NEAR(m.surface_area(), 6.0, 0.05 * 6.0);
    EXPECT_GT(m.signed_volume(), 0.0);
    for (const Vec3& p : m.vertices)
        EXPECT_TRUE(Aabb{}.contains(p, 1.0 / 64));
}

TEST(MarchingCubes, CarvedSphereIsWatertightGenusZero) {
    const auto v = sphere_views(18, 256);
    const TriMesh m = marching_cubes(carve(v.cams, v.masks, 64));
    const TopologyReport t = analyze_topology(m);
    EXPECT_TRUE(t.watertight());
    EXPECT_EQ(t.misoriented_edges, 0u);
    EXPECT_EQ(t.euler_characteristic(), 2);
    EXPECT_EQ(connected_components(m), 1u);
    const double vs = 4.0 / 3.0 * std::numbers::pi * 0.064;
    EXPECT_NEAR(m.signed_volume(), vs, 0.1 * vs);
}

class RandomGrid : public ::testing::TestWithParam<int> {};

TEST_P(RandomGrid, AlwaysWatertightAndOriented) {
    std::mt19937_64 rng(GetParam());
    std::bernoulli_distribution coin(0.35 + 0.05 * (GetParam() % 5));
    VoxelGrid g(10, Aabb{});
    for (std::size_t i = 0; i < g.cell_count(); ++i)
        g.set(i, coin(rng));
    for (bool filter : {false, true}) {
        const TriMesh m = marching_cubes(g, {0.5, filter});
        const TopologyReport t = analyze_topology(m);
        EXPECT_TRUE(t.watertight()) << "filter=" << filter << " boundary=" << t.boundary_edges
                                    << " nonmanifold=" << t.nonmanifold_edges;
        EXPECT_EQ(t.misoriented_edges, 0u) << "filter=" << filter;
        EXPECT_GT(m.signed_volume(), 0.0);
    }
}

INSTANTIATE_TEST_SUITE_P(Seeds, RandomGrid, ::testing::Range(0, 10));

TEST(MarchingCubes, UnfilteredVolumeMatchesVoxelCountForBlocks) {
    // A solid 4x4x4 block with iso 0.5: the surface passes midway between cell centers,
    // so the enclosed volume is the block minus its rounded edges and corners.
    VoxelGrid g(8, Aabb{});
    for (int k = 2; k < 6; ++k)
        for (int j = 2; j < 6; ++j)
            for (int i = 2; i < 6; ++i)
                g.set(i, j, k, true);
    const TriMesh m = marching_cubes(g, {0.5, false});
    const double block = std::pow(4.0 / 8.0, 3);
    EXPECT_LT(m.signed_volume(), block);
    EXPECT_GT(m.signed_volume(), 0.8 * block);
}

TEST(SampleSurface, ZeroPointsAndDegenerateInput) {
    std::mt19937_64 rng(1);
    EXPECT_TRUE(sample_surface(unit_cube_mesh(), 0, rng).empty());
    TriMesh flat;
    flat.vertices = {Vec3::Zero(), Vec3::UnitX(), 2 * Vec3::UnitX()};
    flat.faces = {{0, 1, 2}};
    EXPECT_THROW(sample_surface(flat, 10, rng), InputError);
}

TEST(SampleSurface, PointsLieOnTheTriangle) {
    TriMesh t;
    t.vertices = {Vec3(0.1, 0.2, 0.3), Vec3(1.0, -0.4, 0.2), Vec3(-0.3, 0.9, 0.7)};
    t.faces = {{0, 1, 2}};
    std::mt19937_64 rng(5);
    const PointSet ps = sample_surface(t, 1000, rng);
    ASSERT_EQ(ps.size(), 1000u);
    const Vec3 n = (t.vertices[1] - t.vertices[0]).cross(t.vertices[2] - t.vertices[0]).normalized();
    for (std::size_t i = 0; i < ps.size(); ++i) {
        EXPECT_NEAR(n.dot(ps.points[i] - t.vertices[0]), 0.0, 1e-6);
        EXPECT_NEAR((ps.normals[i] - n).norm(), 0.0, 1e-12);
    }
}

TEST(SampleSurface, CubeFacesAreHitUniformly) {
    std::mt19937_64 rng(2024);
    const std::size_t n = 60000;
    const PointSet ps = sample_surface(unit_cube_mesh(), n, rng);
    std::array<int, 6> counts{};
    for (const Vec3& p : ps.points) {
        for (int a = 0; a < 3; ++a) {
            if (std::abs(p[a]) < 1e-9) {
                ++counts[2 * a];
                break;
            }
            if (std::abs(p[a] - 1.0) < 1e-9) {
                ++counts[2 * a + 1];
                break;
            }
        }
    }
    const double sigma = std::sqrt(n * (1.0 / 6) * (5.0 / 6));
    for (int f = 0; f < 6; ++f)
        EXPECT_NEAR(counts[f], n / 6.0, 3 * sigma) << "face " << f;
}
