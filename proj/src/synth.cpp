// Copyright Contributors to the mvrecon Project
// SPDX-License-Identifier: Apache-2.0
//
#include "mvrecon/synth.hpp"

#include "mvrecon/error.hpp"
#include "mvrecon/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace mvr {

Rgb ColorFunction::evaluate(const Vec3& local) const {
    if (kind == Kind::Solid)
        return primary;
    const double r = local.norm();
    if (r <= 0.0)
        return primary;
    const double azimuth = std::atan2(local.x(), local.z()) + std::numbers::pi; // [0, 2pi]
    const double polar = std::acos(std::clamp(local.y() / r, -1.0, 1.0));      // [0, pi]
    const int a = std::min(n_azimuth - 1, static_cast<int>(azimuth / (2.0 * std::numbers::pi) * n_azimuth));
    const int p = std::min(n_polar - 1, static_cast<int>(polar / std::numbers::pi * n_polar));
    return ((a + p) % 2 == 0) ? primary : secondary;
}

double Primitive::local_distance(const Vec3& q) const {
    switch (shape) {
    case Shape::Sphere:
        return q.norm() - size.x();
    case Shape::Box: {
        const Vec3 d = q.cwiseAbs() - size;
        return d.cwiseMax(0.0).norm() + std::min(d.maxCoeff(), 0.0);
    }
    case Shape::Torus: {
        const double ring = std::hypot(q.x(), q.z()) - size.x();
        return std::hypot(ring, q.y()) - size.y();
    }
    }
    return std::numeric_limits<double>::infinity();
}

Aabb Primitive::bounds() const {
    Vec3 half;
    switch (shape) {
    case Shape::Sphere:
        half = Vec3::Constant(size.x());
        break;
    case Shape::Box:
        half = rotation.cwiseAbs() * size;
        break;
    case Shape::Torus:
        half = Vec3::Constant(size.x() + size.y());
        break;
    }
    return {center - half, center + half};
}

void SdfScene::validate() const {
    if (primitives.empty())
        throw InputError("scene: at least one primitive is required");
    for (const Primitive& p : primitives) {
        if (!p.center.allFinite() || !p.size.allFinite() || !p.rotation.allFinite())
            throw InputError("scene: non-finite primitive parameters");
        if (!(p.rotation * p.rotation.transpose()).isApprox(Mat3::Identity(), 1e-6) ||
            std::abs(p.rotation.determinant() - 1.0) > 1e-6)
            throw InputError("scene: primitive rotation must be a proper rotation");
        const bool sizes_ok = p.shape == Shape::Sphere ? p.size.x() > 0.0
                              : p.shape == Shape::Box  ? (p.size.array() > 0.0).all()
                                                       : (p.size.x() > 0.0 && p.size.y() > 0.0 && p.size.y() < p.size.x());
        if (!sizes_ok)
            throw InputError("scene: primitive sizes must be positive (torus: minor < major)");
        if (p.color.kind == ColorFunction::Kind::Checker && (p.color.n_azimuth < 1 || p.color.n_polar < 1))
            throw InputError("scene: checker cell counts must be >= 1");
        const Aabb b = p.bounds();
        if (!Aabb{}.contains(b.min, 1e-9) || !Aabb{}.contains(b.max, 1e-9))
            throw InputError("scene: primitives must lie inside the unit box [-0.5, 0.5]^3");
    }
}

SdfSample sdf_eval(const SdfScene& scene, const Vec3& p) {
    SdfSample best{std::numeric_limits<double>::infinity(), Rgb::Zero()};
    for (const Primitive& prim : scene.primitives) {
        const Vec3 q = prim.to_local(p);
        const double d = prim.local_distance(q);
        if (d < best.distance)
            best = {d, prim.color.evaluate(q)};
    }
    return best;
}

namespace {

double union_distance(const SdfScene& scene, const Vec3& p) {
    double d = std::numeric_limits<double>::infinity();
    for (const Primitive& prim : scene.primitives)
        d = std::min(d, prim.local_distance(prim.to_local(p)));
    return d;
}

struct Hit {
    double t;
    Vec3 point;
};

std::optional<Hit> trace(const SdfScene& scene, const Vec3& origin, const Vec3& dir, double t_max, const GtOptions& o) {
    double t = 0.0;
    for (int step = 0; step < o.max_steps; ++step) {
        const Vec3 p = origin + t * dir;
        const double d = union_distance(scene, p);
        if (d < o.hit_threshold)
            return Hit{t, p};
        t += d;
        if (t > t_max)
            return std::nullopt;
    }
    return std::nullopt;
}

} // namespace

Vec3 sdf_normal(const SdfScene& scene, const Vec3& p) {
    constexpr double h = 1e-5;
    Vec3 n;
    for (int a = 0; a < 3; ++a) {
        Vec3 e = Vec3::Zero();
        e[a] = h;
        n[a] = union_distance(scene, p + e) - union_distance(scene, p - e);
    }
    const double len = n.norm();
    return len > 0.0 ? Vec3(n / len) : Vec3::UnitY();
}

GtRender render_gt(const SdfScene& scene, const Camera& cam, const GtOptions& opts) {
    scene.validate();
    GtRender out;
    out.image = Image::filled(cam.width(), cam.height(), opts.background);
    out.mask = Mask(cam.width(), cam.height());
    out.depth = Image(cam.width(), cam.height(), 1, std::numeric_limits<double>::infinity());
    const Vec3 origin = cam.position();
    const Vec3 forward = cam.forward();
    // The scene lies inside the unit box, whose circumradius is below 0.87.
    const double t_max = origin.norm() + 1.0;

    parallel_for(0, static_cast<std::size_t>(cam.height()), 8, [&](std::size_t y0, std::size_t y1) {
        for (int y = static_cast<int>(y0); y < static_cast<int>(y1); ++y)
            for (int x = 0; x < cam.width(); ++x) {
                const Vec3 dir = cam.ray_direction(Vec2(x + 0.5, y + 0.5));
                const auto hit = trace(scene, origin, dir, t_max, opts);
                if (!hit)
                    continue;
                const SdfSample s = sdf_eval(scene, hit->point);
                const Vec3 n = sdf_normal(scene, hit->point);
                const double lambert = std::max(0.0, -n.dot(dir));
                out.image.set_rgb(x, y, (opts.ambient + (1.0 - opts.ambient) * lambert) * s.color);
                out.mask.set(x, y, true);
                out.depth.at(x, y, 0) = hit->t * dir.dot(forward);
            }
    });
    return out;
}

View render_view(const SdfScene& scene, const Camera& cam, const DatasetOptions& opts, std::size_t view_index) {
    GtRender gt = render_gt(scene, cam, opts.gt);
    if (opts.perturb) {
        std::mt19937_64 rng(opts.seed * 1000003ULL + view_index);
        std::uniform_real_distribution<double> jitter(1.0 - opts.jitter, 1.0 + opts.jitter);
        const Rgb gain(jitter(rng), jitter(rng), jitter(rng));
        for (int y = 0; y < cam.height(); ++y)
            for (int x = 0; x < cam.width(); ++x)
                if (gt.mask.at(x, y))
                    gt.image.set_rgb(x, y, gt.image.rgb(x, y).cwiseProduct(gain).cwiseMin(1.0));

        // Erode the silhouette below pixel scale: keep a pixel only when three of four
        // quarter-pixel rays hit.
        const Vec3 origin = cam.position();
        const double t_max = origin.norm() + 1.0;
        Mask eroded(cam.width(), cam.height());
        for (int y = 0; y < cam.height(); ++y)
            for (int x = 0; x < cam.width(); ++x) {
                if (!gt.mask.at(x, y))
                    continue;
                int hits = 0;
                for (double oy : {0.25, 0.75})
                    for (double ox : {0.25, 0.75})
                        hits += trace(scene, origin, cam.ray_direction(Vec2(x + ox, y + oy)), t_max, opts.gt) ? 1 : 0;
                eroded.set(x, y, hits >= 3);
            }
        gt.mask = std::move(eroded);
    }
    return View{cam, std::move(gt.image), std::move(gt.mask), std::move(gt.depth)};
}

ViewSet make_dataset(const SdfScene& scene, const OrbitConfig& cfg, const DatasetOptions& opts) {
    scene.validate();
    const std::vector<Camera> cams = orbit_cameras(cfg);
    ViewSet views;
    views.reserve(cams.size());
    for (std::size_t k = 0; k < cams.size(); ++k)
        views.push_back(render_view(scene, cams[k], opts, k));
    return views;
}

namespace {

double primitive_area(const Primitive& p) {
    switch (p.shape) {
    case Shape::Sphere:
        return 4.0 * std::numbers::pi * p.size.x() * p.size.x();
    case Shape::Box:
        return 8.0 * (p.size.x() * p.size.y() + p.size.y() * p.size.z() + p.size.x() * p.size.z());
    case Shape::Torus:
        return 4.0 * std::numbers::pi * std::numbers::pi * p.size.x() * p.size.y();
    }
    return 0.0;
}

Vec3 sample_on_primitive(const Primitive& p, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vec3 local;
    switch (p.shape) {
    case Shape::Sphere: {
        Vec3 d;
        do {
            d = Vec3(normal(rng), normal(rng), normal(rng));
        } while (d.norm() < 1e-12);
        local = p.size.x() * d.normalized();
        break;
    }
    case Shape::Box: {
        const Vec3& h = p.size;
        const double a_yz = h.y() * h.z(), a_xz = h.x() * h.z(), a_xy = h.x() * h.y();
        const double pick = unit(rng) * (a_yz + a_xz + a_xy);
        const int axis = pick < a_yz ? 0 : pick < a_yz + a_xz ? 1 : 2;
        local = Vec3((2.0 * unit(rng) - 1.0) * h.x(), (2.0 * unit(rng) - 1.0) * h.y(), (2.0 * unit(rng) - 1.0) * h.z());
        local[axis] = unit(rng) < 0.5 ? -h[axis] : h[axis];
        break;
    }
    case Shape::Torus: {
        const double big = p.size.x(), small = p.size.y();
        double phi, theta;
        // Area element is proportional to (big + small cos(phi)).
        do {
            phi = 2.0 * std::numbers::pi * unit(rng);
        } while (unit(rng) * (big + small) > big + small * std::cos(phi));
        theta = 2.0 * std::numbers::pi * unit(rng);
        const double ring = big + small * std::cos(phi);
        local = Vec3(ring * std::sin(theta), small * std::sin(phi), ring * std::cos(theta));
        break;
    }
    }
    return p.center + p.rotation * local;
}

} // namespace

PointSet sample_scene_surface(const SdfScene& scene, std::size_t n, std::mt19937_64& rng) {
    scene.validate();
    std::vector<double> cumulative;
    double total = 0.0;
    for (const Primitive& p : scene.primitives) {
        total += primitive_area(p);
        cumulative.push_back(total);
    }
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    PointSet out;
    out.points.reserve(n);
    std::size_t attempts = 0;
    while (out.points.size() < n) {
        if (++attempts > 1000 * (n + 10))
            throw NumericalError("sample_scene_surface: surface is almost entirely hidden inside other primitives");
        const double pick = unit(rng) * total;
        const std::size_t k = std::min<std::size_t>(
            std::upper_bound(cumulative.begin(), cumulative.end(), pick) - cumulative.begin(), cumulative.size() - 1);
        const Vec3 p = sample_on_primitive(scene.primitives[k], rng);
        bool hidden = false;
        for (std::size_t j = 0; j < scene.primitives.size() && !hidden; ++j)
            if (j != k && scene.primitives[j].local_distance(scene.primitives[j].to_local(p)) < 0.0)
                hidden = true;
        if (!hidden)
            out.points.push_back(p);
    }
    return out;
}

SdfScene checker_sphere_scene(double radius) {
    Primitive s;
    s.shape = Shape::Sphere;
    s.size = Vec3(radius, 0.0, 0.0);
    s.color.kind = ColorFunction::Kind::Checker;
    s.color.primary = Rgb(0.85, 0.35, 0.25);
    s.color.secondary = Rgb(0.25, 0.45, 0.85);
    s.color.n_azimuth = 8;
    s.color.n_polar = 4;
    return SdfScene{{s}};
}

} // namespace mvr
