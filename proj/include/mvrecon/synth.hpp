// Copyright Contributors to the mvrecon Project
// SPDX-License-Identifier: Apache-2.0
//
// Analytic signed-distance scenes rendered by sphere tracing. These provide posed
// views with exact masks, depths and per-point colors for end-to-end verification.
#pragma once

#include "mvrecon/geom.hpp"
#include "mvrecon/grid.hpp"
#include "mvrecon/image.hpp"
#include "mvrecon/views.hpp"

#include <random>
#include <vector>

namespace mvr {

enum class Shape { Sphere, Box, Torus };

/// Procedural albedo in the primitive's local frame.
struct ColorFunction {
    enum class Kind { Solid, Checker };
    Kind kind = Kind::Solid;
    Rgb primary = Rgb::Constant(0.8);
    Rgb secondary = Rgb::Constant(0.2);
    int n_azimuth = 8; // checker cells around the local y axis
    int n_polar = 4;   // checker cells from pole to pole

    Rgb evaluate(const Vec3& local) const;
};

struct Primitive {
    Shape shape = Shape::Sphere;
    Vec3 center = Vec3::Zero();
    Mat3 rotation = Mat3::Identity(); // local -> world
    /// Sphere: (radius, -, -). Box: half extents. Torus: (major radius, minor radius, -).
    Vec3 size = Vec3(0.4, 0.0, 0.0);
    ColorFunction color;

    Vec3 to_local(const Vec3& p) const { return rotation.transpose() * (p - center); }
    double local_distance(const Vec3& q) const;
    /// Conservative world-space bounds.
    Aabb bounds() const;
};

/// Union of primitives, required to fit inside [-0.5, 0.5]^3.
struct SdfScene {
    std::vector<Primitive> primitives;
    void validate() const;
};

struct SdfSample {
    double distance;
    Rgb color; // albedo of the closest primitive at p
};

SdfSample sdf_eval(const SdfScene& scene, const Vec3& p);

/// Unit outward normal by central differences.
Vec3 sdf_normal(const SdfScene& scene, const Vec3& p);

struct GtOptions {
    Rgb background = Rgb::Ones();
    /// Shade = ambient + (1 - ambient) * max(0, n . to_camera).
    double ambient = 0.9;
    int max_steps = 256;
    double hit_threshold = 1e-4;
};

struct GtRender {
    Image image; // H x W x 3
    Mask mask;
    Image depth; // H x W x 1, camera-frame z of the hit, +inf on a miss
};

GtRender render_gt(const SdfScene& scene, const Camera& cam, const GtOptions& opts = {});

struct DatasetOptions {
    GtOptions gt;
    /// Per-view color jitter of +-2% per channel and a sub-pixel eroded silhouette.
    bool perturb = false;
    double jitter = 0.02;
    std::uint64_t seed = 0;
};

View render_view(const SdfScene& scene, const Camera& cam, const DatasetOptions& opts = {}, std::size_t view_index = 0);

/// One view per orbit camera.
ViewSet make_dataset(const SdfScene& scene, const OrbitConfig& cfg, const DatasetOptions& opts = {});

/// Uniform samples on the boundary of the union (points inside another primitive are
/// rejected and redrawn).
PointSet sample_scene_surface(const SdfScene& scene, std::size_t n, std::mt19937_64& rng);

/// A checkerboard sphere of radius 0.4 at the origin.
SdfScene checker_sphere_scene(double radius = 0.4);

} // namespace mvr
