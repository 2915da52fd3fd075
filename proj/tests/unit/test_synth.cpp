// Copyright Contributors to the mvrecon Project
// SPDX-License-Identifier: Apache-2.0
//
#include "mvrecon/error.hpp"
#include "mvrecon/eval.hpp"
#include "mvrecon/synth.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace mvr;

namespace {

Primitive sphere(const Vec3& c, double r) {
    Primitive p;
    p.shape = Shape::Sphere;
    p.center = c;
    p.size = Vec3(r, 0, 0);
    return p;
}

OrbitConfig rig(int n, int res) {
    OrbitConfig cfg;
    cfg.n_views = n;
    cfg.resolution = res;
    return cfg;
}

// Pixels whose center ray passes within `r` of the origin.
Mask analytic_disc(const Camera& cam, double r) {
    Mask m(cam.width(), cam.height());
    for (int y = 0; y < cam.height(); ++y)
        for (int x = 0; x < cam.width(); ++x) {
            const Vec3 d = cam.ray_direction(Vec2(x + 0.5, y + 0.5));
            const Vec3 o = cam.position();
            const double t = -o.dot(d);
            m.set(x, y, t > 0 && (o + t * d).norm() <= r);
        }
    return m;
}

Mat3 rotation_about(const Vec3& axis, double angle) { return Eigen::AngleAxisd(angle, axis.normalized()).matrix(); }

} // namespace

TEST(Sdf, SphereExamples) {
    const SdfScene s{{sphere(Vec3::Zero(), 0.4)}};
    EXPECT_NEAR(sdf_eval(s, Vec3(0.4, 0, 0)).distance, 0.0, 1e-15);
    EXPECT_NEAR(sdf_eval(s, Vec3::Zero()).distance, -0.4, 1e-15);
    EXPECT_NEAR(sdf_eval(s, Vec3(0, 0.3, 0.4)).distance, 0.1, 1e-15);
}

TEST(Sdf, UnionIsMinimumOfParts) {
    const Primitive a = sphere(Vec3(-0.25, 0, 0), 0.2), b = sphere(Vec3(0.25, 0.1, 0), 0.15);
    const SdfScene s{{a, b}};
    std::mt19937_64 rng(0);
    std::uniform_real_distribution<double> u(-0.6, 0.6);
    for (int i = 0; i < 100; ++i) {
        const Vec3 p(u(rng), u(rng), u(rng));
        const double da = (p - a.center).norm() - 0.2, db = (p - b.center).norm() - 0.15;
        EXPECT_NEAR(sdf_eval(s, p).distance, std::min(da, db), 1e-15);
    }
}

TEST(Sdf, BoxAndTorusDistances) {
    Primitive box;
    box.shape = Shape::Box;
    box.size = Vec3(0.2, 0.1, 0.3);
    box.rotation = rotation_about(Vec3(1, 2, 3), 0.7);
    box.center = Vec3(0.05, -0.02, 0.0);
    const SdfScene sb{{box}};
    // Face centre, corner direction and interior, evaluated in the local frame by hand.
    auto world = [&](const Vec3& local) { return Vec3(box.center + box.rotation * local); };
    EXPECT_NEAR(sdf_eval(sb, world(Vec3(0.2, 0.0, 0.0))).distance, 0.0, 1e-12);
    EXPECT_NEAR(sdf_eval(sb, world(Vec3(0.3, 0.0, 0.0))).distance, 0.1, 1e-12);
    EXPECT_NEAR(sdf_eval(sb, world(Vec3(0.3, 0.2, 0.4))).distance, std::sqrt(0.03), 1e-12);
    EXPECT_NEAR(sdf_eval(sb, world(Vec3(0.0, 0.05, 0.0))).distance, -0.05, 1e-12);

    Primitive torus;
    torus.shape = Shape::Torus;
    torus.size = Vec3(0.3, 0.1, 0.0);
    const SdfScene st{{torus}};
    EXPECT_NEAR(sdf_eval(st, Vec3(0.4, 0, 0)).distance, 0.0, 1e-15);
    EXPECT_NEAR(sdf_eval(st, Vec3(0, 0, -0.3)).distance, -0.1, 1e-15);
    EXPECT_NEAR(sdf_eval(st, Vec3::Zero()).distance, 0.2, 1e-15);
    EXPECT_NEAR(sdf_eval(st, Vec3(0, 0.25, 0.3)).distance, 0.15, 1e-15);
}

TEST(Sdf, NormalsPointOutward) {
    const SdfScene s{{sphere(Vec3(0.1, 0, 0), 0.3)}};
    const Vec3 dir = Vec3(1, -2, 0.5).normalized();
    const Vec3 n = sdf_normal(s, Vec3(0.1, 0, 0) + 0.3 * dir);
    EXPECT_NEAR((n - dir).norm(), 0.0, 1e-6);
}

TEST(ColorFunction, CheckerCells) {
    ColorFunction c;
    c.kind = ColorFunction::Kind::Checker;
    c.primary = Rgb(1, 0, 0);
    c.secondary = Rgb(0, 0, 1);
    c.n_azimuth = 4;
    c.n_polar = 2;
    // Azimuth atan2(x, z) + pi: -z is 0, so (x<0, z<0) lands in cell 0; upper hemisphere is polar cell 0.
    const Vec3 cell00 = Vec3(-1, 1, -1).normalized();
    EXPECT_EQ(c.evaluate(cell00), c.primary);
    EXPECT_EQ(c.evaluate(Vec3(-1, -1, -1).normalized()), c.secondary); // polar cell 1
    EXPECT_EQ(c.evaluate(Vec3(-1, 1, 1).normalized()), c.secondary);   // azimuth cell 1
    EXPECT_EQ(c.evaluate(Vec3(1, 1, 1).normalized()), c.primary);      // azimuth cell 2
    ColorFunction solid;
    solid.primary = Rgb(0.1, 0.2, 0.3);
    EXPECT_EQ(solid.evaluate(Vec3(5, 6, 7)), solid.primary);
}

TEST(Scene, Validation) {
    EXPECT_THROW(SdfScene{}.validate(), InputError);
    EXPECT_THROW(SdfScene{{sphere(Vec3(0.2, 0, 0), 0.4)}}.validate(), InputError); // leaves the unit box
    EXPECT_THROW(SdfScene{{sphere(Vec3::Zero(), -0.1)}}.validate(), InputError);
    Primitive t;
    t.shape = Shape::Torus;
    t.size = Vec3(0.1, 0.2, 0);
    EXPECT_THROW(SdfScene{{t}}.validate(), InputError);
    Primitive r = sphere(Vec3::Zero(), 0.2);
    r.rotation = Vec3(1, 1, -1).asDiagonal();
    EXPECT_THROW(SdfScene{{r}}.validate(), InputError);
    EXPECT_NO_THROW(checker_sphere_scene().validate());
}

TEST(RenderGt, CameraFacingAwaySeesBackground) {
    const SdfScene s = checker_sphere_scene();
    // Camera at (0, 0, 2) looking further away from the scene.
    const Camera cam(32, 32, 40, 40, 16, 16, look_at(Vec3(0, 0, 2), Vec3(0, 0, 3), Vec3::UnitY()));
    GtOptions opts;
    opts.background = Rgb(0.1, 0.7, 0.3);
    const GtRender r = render_gt(s, cam, opts);
    EXPECT_EQ(r.mask.count(), 0u);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
            EXPECT_EQ(r.image.rgb(x, y), opts.background);
            EXPECT_TRUE(std::isinf(r.depth.at(x, y, 0)));
        }
}

TEST(RenderGt, SphereSilhouetteMatchesAnalyticDisc) {
    const SdfScene s = checker_sphere_scene(0.4);
    const auto cams = orbit_cameras(rig(18, 256));
    const double f = cams[0].fy();
    const double expected_radius = f * std::tan(std::asin(0.4 / 2.0));
    std::size_t first = 0;
    for (std::size_t k = 0; k < cams.size(); ++k) {
        const GtRender r = render_gt(s, cams[k]);
        EXPECT_GT(mask_iou(r.mask, analytic_disc(cams[k], 0.4)), 0.995) << "view " << k;
        // Radius from the mask area and from the extreme row of the disc.
        const double area_radius = std::sqrt(static_cast<double>(r.mask.count()) / std::numbers::pi);
        EXPECT_NEAR(area_radius, expected_radius, 1.0) << "view " << k;
        int top = cams[k].height();
        for (int y = 0; y < cams[k].height(); ++y)
            for (int x = 0; x < cams[k].width(); ++x)
                if (r.mask.at(x, y))
                    top = std::min(top, y);
        EXPECT_NEAR(cams[k].cy() - top, expected_radius, 1.0) << "view " << k;
        if (k == 0)
            first = r.mask.count();
        else
            EXPECT_NEAR(static_cast<double>(r.mask.count()), static_cast<double>(first), 0.01 * first);
    }
}

TEST(RenderGt, DepthConsistencyAndMaskAgreement) {
    SdfScene s;
    s.primitives.push_back(sphere(Vec3(-0.15, 0.05, 0.0), 0.25));
    Primitive box;
    box.shape = Shape::Box;
    box.center = Vec3(0.2, -0.1, 0.1);
    box.size = Vec3(0.12, 0.15, 0.1);
    box.rotation = rotation_about(Vec3(0, 1, 1), 0.5);
    s.primitives.push_back(box);
    OrbitConfig cfg = rig(5, 96);
    cfg.elevation = 0.3;
    for (const Camera& cam : orbit_cameras(cfg)) {
        const GtRender r = render_gt(s, cam);
        std::size_t hits = 0;
        for (int y = 0; y < cam.height(); ++y)
            for (int x = 0; x < cam.width(); ++x) {
                const double z = r.depth.at(x, y, 0);
                ASSERT_EQ(r.mask.at(x, y), std::isfinite(z));
                if (!std::isfinite(z))
                    continue;
                ++hits;
                const Vec3 p = unproject(cam, Vec2(x + 0.5, y + 0.5), z);
                EXPECT_LT(std::abs(sdf_eval(s, p).distance), 1e-3);
            }
        EXPECT_GT(hits, 100u);
    }
}

TEST(RenderGt, HeadlightShadingRange) {
    const SdfScene s = checker_sphere_scene();
    GtOptions opts;
    const Camera cam = orbit_cameras(rig(1, 64)).front();
    const GtRender r = render_gt(s, cam, opts);
    const Rgb a = s.primitives[0].color.primary, b = s.primitives[0].color.secondary;
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
            if (!r.mask.at(x, y))
                continue;
            const Rgb c = r.image.rgb(x, y);
            // c = k * albedo with k in [ambient, 1].
            const Rgb& albedo = std::abs(c.x() / a.x() - c.z() / a.z()) < 1e-9 ? a : b;
            const double k = c.x() / albedo.x();
            EXPECT_GE(k, opts.ambient - 1e-12);
            EXPECT_LE(k, 1.0 + 1e-12);
            EXPECT_NEAR(c.y(), k * albedo.y(), 1e-12);
        }
    // The pixel at the image centre faces the light head on.
    const Vec3 centre = r.image.rgb(32, 32);
    EXPECT_NEAR(centre.maxCoeff(), std::max(a.maxCoeff(), b.maxCoeff()) * 1.0, 0.01);
}

TEST(Dataset, EighteenDeterministicNonEmptyViews) {
    const SdfScene s = checker_sphere_scene();
    const OrbitConfig cfg = rig(18, 48);
    const ViewSet a = make_dataset(s, cfg), b = make_dataset(s, cfg);
    ASSERT_EQ(a.size(), 18u);
    const auto cams = orbit_cameras(cfg);
    for (std::size_t k = 0; k < a.size(); ++k) {
        EXPECT_TRUE(a[k].camera.world_to_camera().rotation == cams[k].world_to_camera().rotation);
        EXPECT_GT(a[k].mask.count(), 0u);
        EXPECT_EQ(a[k].image.data(), b[k].image.data());
        EXPECT_EQ(a[k].mask, b[k].mask);
        ASSERT_TRUE(a[k].depth.has_value());
    }
    EXPECT_NO_THROW(validate_views(a));
}

TEST(Dataset, PerturbationBoundsAndErosion) {
    const SdfScene s = checker_sphere_scene();
    const OrbitConfig cfg = rig(6, 64);
    DatasetOptions opts;
    opts.perturb = true;
    opts.seed = 17;
    const ViewSet clean = make_dataset(s, cfg), noisy = make_dataset(s, cfg, opts);
    bool any_change = false;
    for (std::size_t k = 0; k < clean.size(); ++k) {
        std::size_t removed = 0;
        for (int y = 0; y < 64; ++y)
            for (int x = 0; x < 64; ++x) {
                // Erosion only removes foreground.
                if (noisy[k].mask.at(x, y))
                    EXPECT_TRUE(clean[k].mask.at(x, y));
                removed += clean[k].mask.at(x, y) && !noisy[k].mask.at(x, y);
                const Rgb c = clean[k].image.rgb(x, y), n = noisy[k].image.rgb(x, y);
                if (!clean[k].mask.at(x, y)) {
                    EXPECT_EQ(c, n);
                    continue;
                }
                for (int ch = 0; ch < 3; ++ch) {
                    EXPECT_LE(std::abs(n[ch] - c[ch]), opts.jitter * c[ch] + 1e-12);
                    any_change = any_change || n[ch] != c[ch];
                }
            }
        // Sub-pixel erosion touches only boundary pixels.
        EXPECT_GT(removed, 0u);
        EXPECT_LT(removed, clean[k].mask.count() / 5);
    }
    EXPECT_TRUE(any_change);
    const ViewSet again = make_dataset(s, cfg, opts);
    for (std::size_t k = 0; k < again.size(); ++k)
        EXPECT_EQ(again[k].image.data(), noisy[k].image.data());
}

TEST(SurfaceSamples, LieOnVisibleSurface) {
    SdfScene s;
    s.primitives.push_back(sphere(Vec3(-0.1, 0, 0), 0.25));
    s.primitives.push_back(sphere(Vec3(0.15, 0, 0), 0.2)); // overlaps the first
    Primitive t;
    t.shape = Shape::Torus;
    t.center = Vec3(0, 0.3, 0);
    t.size = Vec3(0.15, 0.04, 0);
    s.primitives.push_back(t);
    std::mt19937_64 rng(5);
    const PointSet ps = sample_scene_surface(s, 5000, rng);
    ASSERT_EQ(ps.size(), 5000u);
    for (const Vec3& p : ps.points)
        EXPECT_LT(std::abs(sdf_eval(s, p).distance), 1e-9);
    std::mt19937_64 rng2(5);
    EXPECT_EQ(sample_scene_surface(s, 5000, rng2).points, ps.points);
}

TEST(SurfaceSamples, UniformOnSphere) {
    // Area fractions of z-slabs on a sphere are equal (Archimedes): each of 4 slabs gets 1/4.
    const SdfScene s = checker_sphere_scene(0.4);
    std::mt19937_64 rng(6);
    const std::size_t n = 40000;
    const PointSet ps = sample_scene_surface(s, n, rng);
    int slab[4] = {0, 0, 0, 0};
    for (const Vec3& p : ps.points)
        ++slab[std::min(3, static_cast<int>((p.z() + 0.4) / 0.2))];
    const double sd = std::sqrt(n * 0.25 * 0.75);
    for (int c : slab)
        EXPECT_NEAR(c, n / 4.0, 4.0 * sd);
}
