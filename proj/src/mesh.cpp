// Copyright Contributors to the mvrecon Project
// SPDX-License-Identifier: Apache-2.0
//
#include "mvrecon/mesh.hpp"

#include "mvrecon/error.hpp"
#include "mvrecon/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace mvr {

void TexturedMesh::validate() const {
    validate_indices(mesh);
    if (vertex_colors.size() != mesh.vertices.size())
        throw InputError("textured mesh: need exactly one color per vertex");
}

void laplacian_smooth(TriMesh& mesh, int iterations, double step) {
    if (iterations <= 0)
        return;
    validate_indices(mesh);
    // Unique undirected edges as adjacency lists.
    std::vector<std::vector<std::uint32_t>> nbr(mesh.vertices.size());
    for (const Face& f : mesh.faces)
        for (int k = 0; k < 3; ++k) {
            nbr[f[k]].push_back(f[(k + 1) % 3]);
            nbr[f[k]].push_back(f[(k + 2) % 3]);
        }
    for (auto& n : nbr) {
        std::sort(n.begin(), n.end());
        n.erase(std::unique(n.begin(), n.end()), n.end());
    }
    std::vector<Vec3> next(mesh.vertices.size());
    for (int it = 0; it < iterations; ++it) {
        for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
            if (nbr[v].empty()) {
                next[v] = mesh.vertices[v];
                continue;
            }
            Vec3 mean = Vec3::Zero();
            for (std::uint32_t u : nbr[v])
                mean += mesh.vertices[u];
            mean /= static_cast<double>(nbr[v].size());
            next[v] = mesh.vertices[v] + step * (mean - mesh.vertices[v]);
        }
        mesh.vertices.swap(next);
    }
}

std::size_t remove_degenerate_faces(TriMesh& mesh) {
    const std::size_t before = mesh.faces.size();
    std::size_t out = 0;
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const Face& t = mesh.faces[f];
        if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2] || !(mesh.face_area(f) > 0.0))
            continue;
        mesh.faces[out++] = t;
    }
    mesh.faces.resize(out);
    return before - out;
}

TriMesh extract_mesh(const VoxelGrid& grid, int smooth_iters, const MarchingCubesOptions& mc) {
    if (smooth_iters < 0)
        throw InputError("extract_mesh: smooth_iters must be >= 0");
    TriMesh mesh = marching_cubes(grid, mc);
    laplacian_smooth(mesh, smooth_iters, 0.5);
    remove_degenerate_faces(mesh);
    return mesh;
}

std::size_t VisibilityBuffer::covered_pixels() const {
    return static_cast<std::size_t>(std::count_if(face.begin(), face.end(), [](std::int32_t f) { return f >= 0; }));
}

VisibilityBuffer rasterize_visibility(const TriMesh& mesh, const Camera& cam) {
    validate_indices(mesh);
    VisibilityBuffer vis;
    vis.width = cam.width();
    vis.height = cam.height();
    const std::size_t n_pix = static_cast<std::size_t>(vis.width) * vis.height;
    vis.face.assign(n_pix, -1);
    vis.barycentric.assign(n_pix, Vec3::Zero());
    vis.depth.assign(n_pix, std::numeric_limits<double>::infinity());

    // Camera-space vertices and their screen positions.
    std::vector<Vec3> cam_pts(mesh.vertices.size());
    std::vector<Vec2> screen(mesh.vertices.size());
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
        cam_pts[v] = cam.world_to_camera().apply(mesh.vertices[v]);
        const double z = cam_pts[v].z();
        screen[v] = Vec2(cam.fx() * cam_pts[v].x() / z + cam.cx(), cam.fy() * cam_pts[v].y() / z + cam.cy());
    }

    constexpr int kBand = 16;
    const int n_bands = (vis.height + kBand - 1) / kBand;
    parallel_for(0, static_cast<std::size_t>(n_bands), 1, [&](std::size_t b0, std::size_t b1) {
        for (std::size_t band = b0; band < b1; ++band) {
            const int row0 = static_cast<int>(band) * kBand;
            const int row1 = std::min(vis.height, row0 + kBand) - 1;
            for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
                const Face& t = mesh.faces[f];
                const double z0 = cam_pts[t[0]].z(), z1 = cam_pts[t[1]].z(), z2 = cam_pts[t[2]].z();
                if (z0 <= kNearEpsilon || z1 <= kNearEpsilon || z2 <= kNearEpsilon)
                    continue;
                const Vec2& a = screen[t[0]];
                const Vec2& b = screen[t[1]];
                const Vec2& c = screen[t[2]];
                const double area = (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
                if (std::abs(area) < 1e-12)
                    continue;
                const int y_lo = std::max(row0, static_cast<int>(std::ceil(std::min({a.y(), b.y(), c.y()}) - 0.5)));
                const int y_hi = std::min(row1, static_cast<int>(std::floor(std::max({a.y(), b.y(), c.y()}) - 0.5)));
                if (y_lo > y_hi)
                    continue;
                const int x_lo = std::max(0, static_cast<int>(std::ceil(std::min({a.x(), b.x(), c.x()}) - 0.5)));
                const int x_hi =
                    std::min(vis.width - 1, static_cast<int>(std::floor(std::max({a.x(), b.x(), c.x()}) - 0.5)));
                const double inv_area = 1.0 / area;
                for (int y = y_lo; y <= y_hi; ++y)
                    for (int x = x_lo; x <= x_hi; ++x) {
                        const double px = x + 0.5, py = y + 0.5;
                        const double l0 = ((b.x() - px) * (c.y() - py) - (b.y() - py) * (c.x() - px)) * inv_area;
                        const double l1 = ((c.x() - px) * (a.y() - py) - (c.y() - py) * (a.x() - px)) * inv_area;
                        const double l2 = 1.0 - l0 - l1;
                        if (l0 < 0.0 || l1 < 0.0 || l2 < 0.0)
                            continue;
                        const double w0 = l0 / z0, w1 = l1 / z1, w2 = l2 / z2;
                        const double sum = w0 + w1 + w2;
                        const double depth = 1.0 / sum;
                        const std::size_t idx = vis.index(x, y);
                        if (depth < vis.depth[idx] || (depth == vis.depth[idx] && static_cast<std::int32_t>(f) < vis.face[idx])) {
                            vis.depth[idx] = depth;
                            vis.face[idx] = static_cast<std::int32_t>(f);
                            vis.barycentric[idx] = Vec3(w0, w1, w2) / sum;
                        }
                    }
            }
        }
    });
    return vis;
}

Image shade(const VisibilityBuffer& vis, const TexturedMesh& tm, const Rgb& background) {
    Image img(vis.width, vis.height, 3);
    for (int y = 0; y < vis.height; ++y)
        for (int x = 0; x < vis.width; ++x) {
            const std::size_t idx = vis.index(x, y);
            const std::int32_t f = vis.face[idx];
            if (f < 0) {
                img.set_rgb(x, y, background);
                continue;
            }
            const Face& t = tm.mesh.faces[static_cast<std::size_t>(f)];
            const Vec3& w = vis.barycentric[idx];
            img.set_rgb(x, y, w[0] * tm.vertex_colors[t[0]] + w[1] * tm.vertex_colors[t[1]] + w[2] * tm.vertex_colors[t[2]]);
        }
    return img;
}

MeshRender rasterize_mesh(const TexturedMesh& tm, const Camera& cam, const Rgb& background) {
    tm.validate();
    MeshRender r;
    r.visibility = rasterize_visibility(tm.mesh, cam);
    r.color = shade(r.visibility, tm, background);
    return r;
}

std::vector<Rgb> shade_backward(const VisibilityBuffer& vis, const TriMesh& mesh, const Image& grad_color) {
    if (grad_color.width() != vis.width || grad_color.height() != vis.height || grad_color.channels() != 3)
        throw InputError("shade_backward: gradient image does not match the visibility buffer");
    std::vector<Rgb> g(mesh.vertices.size(), Rgb::Zero());
    for (int y = 0; y < vis.height; ++y)
        for (int x = 0; x < vis.width; ++x) {
            const std::size_t idx = vis.index(x, y);
            const std::int32_t f = vis.face[idx];
            if (f < 0)
                continue;
            const Face& t = mesh.faces[static_cast<std::size_t>(f)];
            const Rgb d = grad_color.rgb(x, y);
            for (int k = 0; k < 3; ++k)
                g[t[k]] += vis.barycentric[idx][k] * d;
        }
    return g;
}

void RefineConfig::validate() const {
    if (steps < 0)
        throw InputError("refine: steps must be >= 0");
    if (!(lr > 0.0) || !std::isfinite(lr))
        throw InputError("refine: learning rate must be positive");
    weights.validate();
}

RefineResult refine_texture(const TexturedMesh& tm, const ViewSet& views, const RefineConfig& cfg,
                            const PerceptualLoss* perceptual) {
    cfg.validate();
    tm.validate();
    if (views.empty())
        throw InputError("refine: at least one view is required");
    validate_views(views);

    // Geometry is fixed, so visibility is computed once per view.
    std::vector<VisibilityBuffer> vis;
    vis.reserve(views.size());
    std::size_t covered = 0;
    for (const View& v : views) {
        vis.push_back(rasterize_visibility(tm.mesh, v.camera));
        covered += vis.back().covered_pixels();
    }
    if (covered == 0)
        throw InputError("refine: the mesh is not visible in any view");

    // Vertices touched by a covered pixel, per view. Only these receive gradient there.
    std::vector<std::vector<std::uint32_t>> seen(views.size());
    RefineResult result;
    result.mesh = tm;
    result.observed.assign(tm.mesh.vertices.size(), false);
    for (std::size_t k = 0; k < vis.size(); ++k) {
        std::vector<bool> touched(tm.mesh.vertices.size(), false);
        for (std::size_t i = 0; i < vis[k].face.size(); ++i)
            if (vis[k].face[i] >= 0)
                for (std::uint32_t v : tm.mesh.faces[static_cast<std::size_t>(vis[k].face[i])])
                    touched[v] = true;
        for (std::uint32_t v = 0; v < touched.size(); ++v)
            if (touched[v]) {
                seen[k].push_back(v);
                result.observed[v] = true;
            }
    }

    std::vector<Rgb>& colors = result.mesh.vertex_colors;
    for (Rgb& c : colors)
        c = c.cwiseMax(0.0).cwiseMin(1.0);
    // Each vertex is visible in a few views only; lazy Adam keeps momentum from moving it
    // while it is out of sight, which otherwise makes the colors oscillate pass to pass.
    AdamMoments moments(3 * colors.size());
    std::vector<long> vertex_steps(colors.size(), 0);
    const AdamHyper hyper;
    for (int step = 0; step < cfg.steps; ++step) {
        const std::size_t k = static_cast<std::size_t>(step) % views.size();
        const Image rendered = shade(vis[k], result.mesh, cfg.background);
        const ReconLoss loss = recon_loss(rendered, views[k].image, cfg.weights, perceptual);
        if (!std::isfinite(loss.total))
            throw NumericalError("refine: loss became non-finite at step " + std::to_string(step));
        const std::vector<Rgb> g = shade_backward(vis[k], tm.mesh, loss.grad);
        adam_update_rows({reinterpret_cast<double*>(colors.data()), 3 * colors.size()},
                         {reinterpret_cast<const double*>(g.data()), 3 * g.size()}, moments, vertex_steps, seen[k], 3,
                         hyper, cfg.lr);
        for (std::uint32_t v : seen[k])
            colors[v] = colors[v].cwiseMax(0.0).cwiseMin(1.0);
        result.trace.push_back({step, loss.mse, loss.dssim, loss.perceptual, loss.total});
    }
    return result;
}

} // namespace mvr
