// Copyright Contributors to the mvrecon Project
// SPDX-License-Identifier: Apache-2.0
//
#include "mvrecon/error.hpp"
#include "mvrecon/parallel.hpp"
#include "splat_internal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace mvr {

void GaussianSet::push_back(const Gaussian& g) {
    positions.push_back(g.position);
    log_scales.push_back(g.log_scale);
    rotations.push_back(g.rotation);
    opacity_logits.push_back(g.opacity_logit);
    colors.push_back(g.color);
}

Gaussian GaussianSet::at(std::size_t i) const {
    return {positions[i], log_scales[i], rotations[i], opacity_logits[i], colors[i]};
}

void GaussianSet::validate() const {
    const std::size_t n = positions.size();
    if (log_scales.size() != n || rotations.size() != n || opacity_logits.size() != n || colors.size() != n)
        throw InputError("gaussian set: parameter arrays have different lengths");
    for (std::size_t i = 0; i < n; ++i) {
        if (!positions[i].allFinite() || !log_scales[i].allFinite() || !rotations[i].allFinite() ||
            !std::isfinite(opacity_logits[i]) || !colors[i].allFinite())
            throw InputError("gaussian set: non-finite parameter at index " + std::to_string(i));
        if (!std::isfinite(std::exp(log_scales[i].maxCoeff())))
            throw InputError("gaussian set: scale overflows at index " + std::to_string(i));
        if (rotations[i].norm() < 1e-12)
            throw InputError("gaussian set: zero quaternion at index " + std::to_string(i));
    }
}

GaussianSet GaussianSet::select(const std::vector<bool>& keep) const {
    GaussianSet out;
    for (std::size_t i = 0; i < count(); ++i)
        if (keep[i])
            out.push_back(at(i));
    return out;
}

GaussianGrads::GaussianGrads(std::size_t n)
    : positions(n, Vec3::Zero()), log_scales(n, Vec3::Zero()), rotations(n, Quat::Zero()),
      opacity_logits(n, 0.0), colors(n, Rgb::Zero()) {}

double sigmoid(double x) {
    if (x >= 0.0)
        return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

Mat3 quat_to_matrix(const Quat& q_raw) {
    const Quat q = q_raw.normalized();
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    Mat3 r;
    r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
         2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
         2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
    return r;
}

namespace detail {

ProjectionTerms projection_terms(const Vec3& position, const Vec3& log_scale, const Quat& rotation,
                                 const Camera& cam, double cov_epsilon) {
    ProjectionTerms t;
    const Mat3& w = cam.world_to_camera().rotation;
    t.cam_point = cam.world_to_camera().apply(position);
    t.rotation = quat_to_matrix(rotation);
    t.scale = log_scale.array().exp();
    const Mat3 m = t.rotation * t.scale.asDiagonal();
    t.cov3 = m * m.transpose();

    const double x = t.cam_point.x(), y = t.cam_point.y(), z = t.cam_point.z();
    const double iz = 1.0 / z;
    t.jacobian << cam.fx() * iz, 0.0, -cam.fx() * x * iz * iz,
                  0.0, cam.fy() * iz, -cam.fy() * y * iz * iz;
    const Eigen::Matrix<double, 2, 3> a = t.jacobian * w;
    t.cov2 = a * t.cov3 * a.transpose();
    t.cov2(0, 1) = t.cov2(1, 0) = 0.5 * (t.cov2(0, 1) + t.cov2(1, 0));
    t.cov2(0, 0) += cov_epsilon;
    t.cov2(1, 1) += cov_epsilon;
    t.mean2 = Vec2(cam.fx() * x * iz + cam.cx(), cam.fy() * y * iz + cam.cy());
    return t;
}

} // namespace detail

namespace {

std::optional<Splat2D> make_splat(const Vec3& position, const Vec3& log_scale, const Quat& rotation,
                                  const Camera& cam, const RasterSettings& settings) {
    const Vec3 t = cam.world_to_camera().apply(position);
    if (t.z() <= kNearEpsilon)
        return std::nullopt;
    const detail::ProjectionTerms terms = detail::projection_terms(position, log_scale, rotation, cam,
                                                                   settings.cov2d_epsilon);
    const Eigen::Matrix2d& cov = terms.cov2;
    const double det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(0, 1);
    if (!(det > 0.0) || !std::isfinite(det))
        return std::nullopt;

    const double hx = std::sqrt(detail::kMass99 * cov(0, 0));
    const double hy = std::sqrt(detail::kMass99 * cov(1, 1));
    const Vec2& m = terms.mean2;
    if (m.x() + hx < 0.0 || m.x() - hx > cam.width() || m.y() + hy < 0.0 || m.y() - hy > cam.height())
        return std::nullopt;

    Splat2D s;
    s.mean = m;
    s.cov = cov;
    s.conic = Eigen::Vector3d(cov(1, 1) / det, -cov(0, 1) / det, cov(0, 0) / det);
    s.depth = t.z();
    return s;
}

struct PixelRange {
    int x0, y0, x1, y1; // inclusive
};

/// Pixels whose centers can receive alpha >= min_alpha from this splat.
std::optional<PixelRange> pixel_range(const Splat2D& s, double opacity, const Camera& cam,
                                      const RasterSettings& settings) {
    if (settings.min_alpha > 0.0 && opacity < settings.min_alpha)
        return std::nullopt;
    PixelRange r{0, 0, cam.width() - 1, cam.height() - 1};
    if (settings.min_alpha > 0.0) {
        const double k = 2.0 * std::log(opacity / settings.min_alpha);
        const double hx = std::sqrt(k * s.cov(0, 0));
        const double hy = std::sqrt(k * s.cov(1, 1));
        r.x0 = std::max(r.x0, static_cast<int>(std::ceil(s.mean.x() - hx - 0.5)));
        r.x1 = std::min(r.x1, static_cast<int>(std::floor(s.mean.x() + hx - 0.5)));
        r.y0 = std::max(r.y0, static_cast<int>(std::ceil(s.mean.y() - hy - 0.5)));
        r.y1 = std::min(r.y1, static_cast<int>(std::floor(s.mean.y() + hy - 0.5)));
    }
    if (r.x0 > r.x1 || r.y0 > r.y1)
        return std::nullopt;
    return r;
}

} // namespace

std::optional<Splat2D> project_gaussian(const Gaussian& g, const Camera& cam, const RasterSettings& settings) {
    return make_splat(g.position, g.log_scale, g.rotation, cam, settings);
}

RenderOutput rasterize(const GaussianSet& gs, const Camera& cam, const Rgb& background,
                       const RasterSettings& settings) {
    gs.validate();
    if (settings.tile_size < 1)
        throw InputError("rasterize: tile size must be positive");
    const std::size_t n = gs.count();
    const int width = cam.width();
    const int height = cam.height();

    RenderOutput out;
    out.color = Image(width, height, 3);
    out.alpha = Image(width, height, 1);
    RenderAux& aux = out.aux;

    aux.splats.resize(n);
    parallel_for(0, n, 1024, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i)
            aux.splats[i] = make_splat(gs.positions[i], gs.log_scales[i], gs.rotations[i], cam, settings);
    });

    for (std::size_t i = 0; i < n; ++i)
        if (aux.splats[i])
            aux.depth_order.push_back(static_cast<std::uint32_t>(i));
    std::sort(aux.depth_order.begin(), aux.depth_order.end(), [&](std::uint32_t a, std::uint32_t b) {
        const double da = aux.splats[a]->depth, db = aux.splats[b]->depth;
        return da < db || (da == db && a < b);
    });

    const int ts = settings.tile_size;
    const int tiles_x = (width + ts - 1) / ts;
    const int tiles_y = (height + ts - 1) / ts;
    aux.tiles.resize(static_cast<std::size_t>(tiles_x) * tiles_y);
    for (int ty = 0; ty < tiles_y; ++ty)
        for (int tx = 0; tx < tiles_x; ++tx) {
            TileRecords& tile = aux.tiles[static_cast<std::size_t>(ty) * tiles_x + tx];
            tile.x0 = tx * ts;
            tile.y0 = ty * ts;
            tile.x1 = std::min(width, tile.x0 + ts);
            tile.y1 = std::min(height, tile.y0 + ts);
        }

    std::vector<double> opacity(n);
    for (std::size_t i = 0; i < n; ++i)
        opacity[i] = sigmoid(gs.opacity_logits[i]);

    // Binning in depth order keeps every tile list front to back.
    for (std::uint32_t g : aux.depth_order) {
        const auto range = pixel_range(*aux.splats[g], opacity[g], cam, settings);
        if (!range)
            continue;
        for (int ty = range->y0 / ts; ty <= range->y1 / ts; ++ty)
            for (int tx = range->x0 / ts; tx <= range->x1 / ts; ++tx)
                aux.tiles[static_cast<std::size_t>(ty) * tiles_x + tx].gaussians.push_back(g);
    }

    parallel_for(0, aux.tiles.size(), 1, [&](std::size_t b, std::size_t e) {
        for (std::size_t t = b; t < e; ++t) {
            TileRecords& tile = aux.tiles[t];
            const std::size_t n_pix = static_cast<std::size_t>(tile.x1 - tile.x0) * (tile.y1 - tile.y0);
            tile.pixel_offsets.assign(n_pix + 1, 0);
            std::size_t p = 0;
            for (int y = tile.y0; y < tile.y1; ++y)
                for (int x = tile.x0; x < tile.x1; ++x, ++p) {
                    const double px = x + 0.5, py = y + 0.5;
                    double transmittance = 1.0;
                    Rgb accum = Rgb::Zero();
                    for (std::uint32_t slot = 0; slot < tile.gaussians.size(); ++slot) {
                        const std::uint32_t g = tile.gaussians[slot];
                        const Splat2D& s = *aux.splats[g];
                        const double dx = px - s.mean.x(), dy = py - s.mean.y();
                        const double power = -0.5 * (s.conic[0] * dx * dx + 2.0 * s.conic[1] * dx * dy +
                                                     s.conic[2] * dy * dy);
                        const double alpha = opacity[g] * std::exp(power);
                        if (alpha < settings.min_alpha || alpha <= 0.0)
                            continue;
                        tile.contributions.push_back({slot, alpha, transmittance});
                        accum += (alpha * transmittance) * gs.colors[g];
                        transmittance *= 1.0 - alpha;
                        if (transmittance < settings.min_transmittance)
                            break;
                    }
                    tile.pixel_offsets[p + 1] = static_cast<std::uint32_t>(tile.contributions.size());
                    out.color.set_rgb(x, y, accum + transmittance * background);
                    out.alpha.at(x, y, 0) = 1.0 - transmittance;
                }
        }
    });
    return out;
}

} // namespace mvr
