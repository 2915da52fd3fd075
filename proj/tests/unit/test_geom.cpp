// Copyright Contributors to the mvrecon Project
// SPDX-License-Identifier: Apache-2.0
//
#include "mvrecon/error.hpp"
#include "mvrecon/geom.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace mvr;

namespace {

constexpr double kPi = std::numbers::pi;

void expect_proper_rotation(const Mat3& r, double tol) {
    EXPECT_TRUE((r * r.transpose()).isApprox(Mat3::Identity(), tol)) << r;
    EXPECT_NEAR(r.determinant(), 1.0, tol);
}

// Camera center from the world-to-camera transform: x_cam = R x + t = 0.
Vec3 center_of(const Rigid& w2c) { return -w2c.rotation.transpose() * w2c.translation; }

} // namespace

TEST(LookAt, AxisAlignedForward) {
    const Rigid t = look_at({2, 0, 0}, Vec3::Zero(), {0, 1, 0});
    // Third row of R is the camera +z axis expressed in world coordinates.
    const Vec3 forward = t.rotation.row(2).transpose();
    EXPECT_TRUE(forward.isApprox(Vec3(-1, 0, 0), 1e-12)) << forward.transpose();
    // y points down in the camera frame, so world up maps to camera -y.
    EXPECT_TRUE((t.rotation * Vec3(0, 1, 0)).isApprox(Vec3(0, -1, 0), 1e-12));
    EXPECT_TRUE(center_of(t).isApprox(Vec3(2, 0, 0), 1e-12));
}

TEST(LookAt, CanonicalFrameIsIdentityUpToAxisFlips) {
    const Rigid t = look_at({0, 0, 5}, Vec3::Zero(), {0, 1, 0});
    // Looking down -z with y down: x = y cross z stays along +x, y and z flip.
    const Mat3 expected = Vec3(1, -1, -1).asDiagonal();
    EXPECT_TRUE(t.rotation.isApprox(expected, 1e-12)) << t.rotation;
    EXPECT_TRUE(t.apply(Vec3::Zero()).isApprox(Vec3(0, 0, 5), 1e-12));
}

TEST(LookAt, GeneralPoseIsOrthonormal) {
    const Rigid t = look_at({1, 1, 1}, Vec3::Zero(), {0, 1, 0});
    expect_proper_rotation(t.rotation, 1e-9);
    const Vec3 target_cam = t.apply(Vec3::Zero());
    EXPECT_NEAR(target_cam.x(), 0.0, 1e-12);
    EXPECT_NEAR(target_cam.y(), 0.0, 1e-12);
    EXPECT_NEAR(target_cam.z(), std::sqrt(3.0), 1e-12);
}

TEST(LookAt, DegenerateInputsThrow) {
    EXPECT_THROW(look_at({1, 2, 3}, {1, 2, 3}, {0, 1, 0}), InputError);
    EXPECT_THROW(look_at({0, 3, 0}, Vec3::Zero(), {0, 1, 0}), InputError);
    EXPECT_THROW(look_at({0, -3, 0}, Vec3::Zero(), {0, 1, 0}), InputError);
}

TEST(Rigid, MatrixRoundTrip) {
    const Rigid t = look_at({0.3, -0.7, 1.9}, {0.1, 0.0, -0.2}, {0, 1, 0});
    const Rigid back = Rigid::from_matrix(t.matrix());
    EXPECT_TRUE(back.rotation.isApprox(t.rotation, 1e-15));
    EXPECT_TRUE(back.translation.isApprox(t.translation, 1e-15));
    const Rigid inv = t.inverse();
    const Vec3 p(0.2, 0.4, -0.6);
    EXPECT_TRUE(inv.apply(t.apply(p)).isApprox(p, 1e-12));
}

TEST(Camera, ValidatesIntrinsicsAndRotation) {
    const Rigid pose;
    EXPECT_NO_THROW(Camera(4, 4, 1, 1, 2, 2, pose));
    EXPECT_THROW(Camera(0, 4, 1, 1, 2, 2, pose), InputError);
    EXPECT_THROW(Camera(4, 0, 1, 1, 2, 2, pose), InputError);
    EXPECT_THROW(Camera(4, 4, 0, 1, 2, 2, pose), InputError);
    EXPECT_THROW(Camera(4, 4, 1, -1, 2, 2, pose), InputError);
    EXPECT_THROW(Camera(4, 4, 1, 1, NAN, 2, pose), InputError);

    Rigid reflect;
    reflect.rotation = Vec3(1, 1, -1).asDiagonal();
    EXPECT_THROW(Camera(4, 4, 1, 1, 2, 2, reflect), InputError);
    Rigid skewed;
    skewed.rotation(0, 1) = 1e-3;
    EXPECT_THROW(Camera(4, 4, 1, 1, 2, 2, skewed), InputError);
    Rigid nearly;
    nearly.rotation(0, 1) = 1e-8; // within the 1e-6 orthonormality tolerance
    EXPECT_NO_THROW(Camera(4, 4, 1, 1, 2, 2, nearly));
}

TEST(Orbit, EighteenViewsAtDistanceTwo) {
    OrbitConfig cfg; // defaults: 18 views, distance 2, elevation 0
    ASSERT_EQ(cfg.n_views, 18);
    ASSERT_EQ(cfg.distance, 2.0);
    ASSERT_EQ(cfg.elevation, 0.0);
    const auto cams = orbit_cameras(cfg);
    ASSERT_EQ(cams.size(), 18u);
    for (std::size_t k = 0; k < cams.size(); ++k) {
        const Vec3 p = cams[k].position();
        EXPECT_NEAR(p.norm(), 2.0, 1e-12);
        EXPECT_NEAR(p.y(), 0.0, 1e-12);
        const double az = std::atan2(p.x(), p.z());
        const double expected = 2.0 * kPi * static_cast<double>(k) / 18.0;
        EXPECT_NEAR(std::remainder(az - expected, 2.0 * kPi), 0.0, 1e-12) << "view " << k;
        expect_proper_rotation(cams[k].world_to_camera().rotation, 1e-12);
    }
    // Consecutive cameras are exactly 20 degrees apart.
    for (std::size_t k = 0; k + 1 < cams.size(); ++k) {
        const double c = cams[k].position().normalized().dot(cams[k + 1].position().normalized());
        EXPECT_NEAR(std::acos(std::clamp(c, -1.0, 1.0)), 20.0 * kPi / 180.0, 1e-9);
    }
}

TEST(Orbit, SingleViewAtAzimuthZero) {
    OrbitConfig cfg;
    cfg.n_views = 1;
    const auto cams = orbit_cameras(cfg);
    ASSERT_EQ(cams.size(), 1u);
    EXPECT_TRUE(cams[0].position().isApprox(Vec3(0, 0, 2), 1e-12)) << cams[0].position().transpose();
}

TEST(Orbit, ElevationSetsHeight) {
    OrbitConfig cfg;
    cfg.n_views = 4;
    cfg.elevation = kPi / 4.0;
    cfg.distance = 1.0;
    for (const Camera& c : orbit_cameras(cfg)) {
        EXPECT_NEAR(c.position().y(), std::sqrt(2.0) / 2.0, 1e-12);
        EXPECT_NEAR(c.position().norm(), 1.0, 1e-12);
    }
}

TEST(Orbit, IntrinsicsFromFov) {
    OrbitConfig cfg;
    cfg.resolution = 128;
    const Camera c = orbit_cameras(cfg).front();
    EXPECT_EQ(c.width(), 128);
    EXPECT_EQ(c.height(), 128);
    EXPECT_DOUBLE_EQ(c.cx(), 64.0);
    EXPECT_DOUBLE_EQ(c.cy(), 64.0);
    // The top edge of the image subtends half the vertical field of view.
    EXPECT_NEAR(std::atan(64.0 / c.fy()), cfg.fov_y / 2.0, 1e-12);
    EXPECT_DOUBLE_EQ(c.fx(), c.fy());
}

TEST(Orbit, InvalidConfigThrows) {
    OrbitConfig cfg;
    cfg.n_views = 0;
    EXPECT_THROW(orbit_cameras(cfg), InputError);
    cfg = {};
    cfg.distance = 0.0;
    EXPECT_THROW(orbit_cameras(cfg), InputError);
    cfg = {};
    cfg.fov_y = kPi;
    EXPECT_THROW(orbit_cameras(cfg), InputError);
    cfg = {};
    cfg.fov_y = 0.0;
    EXPECT_THROW(orbit_cameras(cfg), InputError);
    cfg = {};
    cfg.resolution = 0;
    EXPECT_THROW(orbit_cameras(cfg), InputError);
}

TEST(Project, OriginHitsPrincipalPointFromEveryOrbitCamera) {
    for (double el : {0.0, 0.3, -1.1}) {
        OrbitConfig cfg;
        cfg.elevation = el;
        cfg.resolution = 96;
        for (const Camera& c : orbit_cameras(cfg)) {
            const auto p = project(c, Vec3::Zero());
            ASSERT_TRUE(p.has_value());
            EXPECT_NEAR(p->pixel.x(), c.cx(), 1e-9);
            EXPECT_NEAR(p->pixel.y(), c.cy(), 1e-9);
            EXPECT_NEAR(p->depth, cfg.distance, 1e-12);
        }
    }
}

TEST(Project, BehindAndAtCameraAreRejected) {
    const Camera c = orbit_cameras(OrbitConfig{}).front(); // at (0,0,2) looking at -z
    EXPECT_FALSE(project(c, Vec3(0, 0, 3)).has_value());
    EXPECT_FALSE(project(c, Vec3(0.1, 0.2, 2.0)).has_value());
    EXPECT_FALSE(project(c, Vec3(0, 0, 2.0 - 0.5 * kNearEpsilon)).has_value());
    EXPECT_TRUE(project(c, Vec3(0, 0, 2.0 - 2.0 * kNearEpsilon)).has_value());
}

TEST(Project, SimilarTriangles) {
    const Camera c = orbit_cameras(OrbitConfig{}).front();
    // World +x at this camera is image -x (camera looks down -z, x right is world -x).
    const auto p = project(c, Vec3(0.1, 0.0, 0.0));
    ASSERT_TRUE(p.has_value());
    const double expected = 0.1 * c.fx() / 2.0;
    EXPECT_NEAR(std::abs(p->pixel.x() - c.cx()), expected, 1e-9);
    EXPECT_NEAR(p->pixel.y(), c.cy(), 1e-9);
    const auto q = project(c, Vec3(0.0, 0.1, 0.0));
    ASSERT_TRUE(q.has_value());
    // +y up in the world maps to smaller row indices.
    EXPECT_NEAR(q->pixel.y(), c.cy() - 0.1 * c.fy() / 2.0, 1e-9);
}

TEST(Project, UnprojectRoundTrip) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    OrbitConfig cfg;
    cfg.elevation = 0.4;
    for (const Camera& c : orbit_cameras(cfg)) {
        for (int s = 0; s < 50; ++s) {
            const Vec2 px(u(rng) * c.width(), u(rng) * c.height());
            const double depth = 0.5 + 3.0 * u(rng);
            const Vec3 w = unproject(c, px, depth);
            const auto p = project(c, w);
            ASSERT_TRUE(p.has_value());
            EXPECT_LT((p->pixel - px).norm(), 1e-6);
            EXPECT_NEAR(p->depth, depth, 1e-9);
        }
    }
}

TEST(Camera, RayDirectionMatchesUnproject) {
    const Camera c = orbit_cameras(OrbitConfig{}).at(5);
    const Vec2 px(17.25, 300.5);
    const Vec3 expected = (unproject(c, px, 1.0) - c.position()).normalized();
    EXPECT_TRUE(c.ray_direction(px).isApprox(expected, 1e-12));
    EXPECT_TRUE(c.forward().isApprox((-c.position()).normalized(), 1e-12));
}
