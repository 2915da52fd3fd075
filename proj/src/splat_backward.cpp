// Copyright Contributors to the mvrecon Project
// SPDX-License-Identifier: Apache-2.0
//
#include "mvrecon/error.hpp"
#include "mvrecon/parallel.hpp"
#include "splat_internal.hpp"

#include <array>
#include <cmath>

namespace mvr {

namespace {

/// Loss gradient with respect to one splat's screen-space quantities.
struct ScreenGrad {
    Vec2 mean = Vec2::Zero();
    Eigen::Vector3d conic = Eigen::Vector3d::Zero(); // d/da, d/db, d/dc of [[a,b],[b,c]]
    double opacity = 0.0;
    Rgb color = Rgb::Zero();

    ScreenGrad& operator+=(const ScreenGrad& o) {
        mean += o.mean;
        conic += o.conic;
        opacity += o.opacity;
        color += o.color;
        return *this;
    }
};

/// d R(q_hat) / d q_hat_k contracted with dL/dR.
Quat rotation_grad(const Quat& qh, const Mat3& g) {
    const double w = qh[0], x = qh[1], y = qh[2], z = qh[3];
    Mat3 dw, dx, dy, dz;
    dw << 0, -z, y, z, 0, -x, -y, x, 0;
    dx << 0, y, z, y, -2 * x, -w, z, w, -2 * x;
    dy << -2 * y, x, w, x, 0, z, -w, z, -2 * y;
    dz << -2 * z, -w, x, w, -2 * z, y, x, y, 0;
    return 2.0 * Quat(g.cwiseProduct(dw).sum(), g.cwiseProduct(dx).sum(), g.cwiseProduct(dy).sum(),
                      g.cwiseProduct(dz).sum());
}

} // namespace

GaussianGrads rasterize_backward(const GaussianSet& gs, const Camera& cam, const Rgb& background,
                                 const RenderOutput& forward, const Image& grad_color,
                                 const RasterSettings& settings) {
    const std::size_t n = gs.count();
    if (grad_color.width() != cam.width() || grad_color.height() != cam.height() || grad_color.channels() != 3)
        throw InputError("rasterize_backward: gradient image must be H x W x 3 and match the camera");
    const RenderAux& aux = forward.aux;
    if (aux.splats.size() != n)
        throw InputError("rasterize_backward: forward records belong to a different Gaussian set");

    std::vector<double> opacity(n);
    for (std::size_t i = 0; i < n; ++i)
        opacity[i] = sigmoid(gs.opacity_logits[i]);

    // Screen-space gradients per tile slot; merged in tile order for run-to-run identical sums.
    std::vector<std::vector<ScreenGrad>> tile_grads(aux.tiles.size());
    parallel_for(0, aux.tiles.size(), 1, [&](std::size_t b, std::size_t e) {
        for (std::size_t t = b; t < e; ++t) {
            const TileRecords& tile = aux.tiles[t];
            std::vector<ScreenGrad>& acc = tile_grads[t];
            acc.assign(tile.gaussians.size(), ScreenGrad{});
            std::size_t p = 0;
            for (int y = tile.y0; y < tile.y1; ++y)
                for (int x = tile.x0; x < tile.x1; ++x, ++p) {
                    const std::uint32_t begin = tile.pixel_offsets[p];
                    const std::uint32_t end = tile.pixel_offsets[p + 1];
                    if (begin == end)
                        continue;
                    const Rgb dl_dc(grad_color.at(x, y, 0), grad_color.at(x, y, 1), grad_color.at(x, y, 2));
                    if (dl_dc.isZero(0.0))
                        continue;
                    const double px = x + 0.5, py = y + 0.5;
                    // Color composited behind the current contributor, normalized by the
                    // transmittance just behind it.
                    Rgb behind = background;
                    for (std::uint32_t r = end; r-- > begin;) {
                        const Contribution& c = tile.contributions[r];
                        const std::uint32_t g = tile.gaussians[c.slot];
                        const Splat2D& s = *aux.splats[g];
                        ScreenGrad& sg = acc[c.slot];
                        const Rgb& color = gs.colors[g];

                        sg.color += (c.alpha * c.transmittance) * dl_dc;
                        const double dl_dalpha = c.transmittance * (color - behind).dot(dl_dc);
                        behind = c.alpha * color + (1.0 - c.alpha) * behind;

                        const double dx = px - s.mean.x(), dy = py - s.mean.y();
                        const double gauss = c.alpha / opacity[g];
                        sg.opacity += gauss * dl_dalpha;
                        const double dl_dpower = c.alpha * dl_dalpha;
                        sg.mean.x() += dl_dpower * (s.conic[0] * dx + s.conic[1] * dy);
                        sg.mean.y() += dl_dpower * (s.conic[1] * dx + s.conic[2] * dy);
                        sg.conic[0] += dl_dpower * (-0.5 * dx * dx);
                        sg.conic[1] += dl_dpower * (-dx * dy);
                        sg.conic[2] += dl_dpower * (-0.5 * dy * dy);
                    }
                }
        }
    });

    std::vector<ScreenGrad> screen(n);
    for (std::size_t t = 0; t < aux.tiles.size(); ++t)
        for (std::size_t slot = 0; slot < tile_grads[t].size(); ++slot)
            screen[aux.tiles[t].gaussians[slot]] += tile_grads[t][slot];

    GaussianGrads grads(n);
    const Mat3& w = cam.world_to_camera().rotation;
    const double fx = cam.fx(), fy = cam.fy();
    parallel_for(0, n, 1024, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            if (!aux.splats[i])
                continue;
            const ScreenGrad& sg = screen[i];
            grads.colors[i] = sg.color;
            grads.opacity_logits[i] = sg.opacity * opacity[i] * (1.0 - opacity[i]);

            const detail::ProjectionTerms pt = detail::projection_terms(
                gs.positions[i], gs.log_scales[i], gs.rotations[i], cam, settings.cov2d_epsilon);
            const Eigen::Vector3d& conic = aux.splats[i]->conic;
            Eigen::Matrix2d q;
            q << conic[0], conic[1], conic[1], conic[2];
            Eigen::Matrix2d dl_dq;
            dl_dq << sg.conic[0], 0.5 * sg.conic[1], 0.5 * sg.conic[1], sg.conic[2];
            const Eigen::Matrix2d dl_dcov2 = -q * dl_dq * q;

            const Eigen::Matrix<double, 2, 3> a = pt.jacobian * w;
            const Mat3 dl_dcov3 = a.transpose() * dl_dcov2 * a;
            const Eigen::Matrix<double, 2, 3> dl_da = 2.0 * dl_dcov2 * a * pt.cov3;
            const Eigen::Matrix<double, 2, 3> dl_dj = dl_da * w.transpose();

            const double tx = pt.cam_point.x(), ty = pt.cam_point.y(), tz = pt.cam_point.z();
            const double iz = 1.0 / tz, iz2 = iz * iz, iz3 = iz2 * iz;
            Vec3 dl_dt;
            dl_dt.x() = sg.mean.x() * fx * iz + dl_dj(0, 2) * (-fx * iz2);
            dl_dt.y() = sg.mean.y() * fy * iz + dl_dj(1, 2) * (-fy * iz2);
            dl_dt.z() = sg.mean.x() * (-fx * tx * iz2) + sg.mean.y() * (-fy * ty * iz2) +
                        dl_dj(0, 0) * (-fx * iz2) + dl_dj(0, 2) * (2.0 * fx * tx * iz3) +
                        dl_dj(1, 1) * (-fy * iz2) + dl_dj(1, 2) * (2.0 * fy * ty * iz3);
            grads.positions[i] = w.transpose() * dl_dt;

            const Mat3 m = pt.rotation * pt.scale.asDiagonal();
            const Mat3 dl_dm = 2.0 * dl_dcov3 * m;
            for (int k = 0; k < 3; ++k)
                grads.log_scales[i][k] = dl_dm.col(k).dot(pt.rotation.col(k)) * pt.scale[k];
            const Mat3 dl_drot = dl_dm * pt.scale.asDiagonal();

            const Quat& raw = gs.rotations[i];
            const double norm = raw.norm();
            const Quat qh = raw / norm;
            const Quat dl_dqh = rotation_grad(qh, dl_drot);
            grads.rotations[i] = (dl_dqh - qh * qh.dot(dl_dqh)) / norm;
        }
    });
    return grads;
}

GaussianGrads rasterize_backward(const GaussianSet& gs, const Camera& cam, const Rgb& background,
                                 const Image& grad_color, const RasterSettings& settings) {
    const RenderOutput fwd = rasterize(gs, cam, background, settings);
    return rasterize_backward(gs, cam, background, fwd, grad_color, settings);
}

} // namespace mvr
