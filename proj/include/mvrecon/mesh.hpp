// Copyright Contributors to the mvrecon Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "mvrecon/grid.hpp"
#include "mvrecon/loss.hpp"
#include "mvrecon/optim.hpp"
#include "mvrecon/trimesh.hpp"
#include "mvrecon/views.hpp"

#include <cstdint>
#include <vector>

namespace mvr {

struct TexturedMesh {
    TriMesh mesh;
    std::vector<Rgb> vertex_colors; // one per vertex, in [0,1]

    void validate() const;
};

/// Uniform-weight Laplacian smoothing: v += step * (mean(neighbours) - v), repeated.
void laplacian_smooth(TriMesh& mesh, int iterations, double step = 0.5);

/// Removes faces with repeated indices or zero area. Returns the number removed.
std::size_t remove_degenerate_faces(TriMesh& mesh);

/// Marching cubes on the occupancy grid, `smooth_iters` Laplacian passes, then
/// degenerate-face cleanup.
TriMesh extract_mesh(const VoxelGrid& grid, int smooth_iters, const MarchingCubesOptions& mc = {});

/// Visible face and perspective-correct barycentric coordinates per pixel.
struct VisibilityBuffer {
    int width = 0, height = 0;
    std::vector<std::int32_t> face; // -1 where nothing is hit
    std::vector<Vec3> barycentric;
    std::vector<double> depth;

    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
    std::size_t covered_pixels() const;
};

/// Z-buffered rasterization of the mesh geometry. Faces with a vertex behind the near
/// plane are skipped; equal depths resolve to the lower face index.
VisibilityBuffer rasterize_visibility(const TriMesh& mesh, const Camera& cam);

/// Pixel colors from a visibility buffer: barycentric blend of vertex colors.
Image shade(const VisibilityBuffer& vis, const TexturedMesh& tm, const Rgb& background);

struct MeshRender {
    Image color;
    VisibilityBuffer visibility;
};

MeshRender rasterize_mesh(const TexturedMesh& tm, const Camera& cam, const Rgb& background);

/// d loss / d vertex_colors given d loss / d image.
std::vector<Rgb> shade_backward(const VisibilityBuffer& vis, const TriMesh& mesh, const Image& grad_color);

struct RefineConfig {
    int steps = 300;
    double lr = 1e-2;
    LossWeights weights;
    Rgb background = Rgb::Ones();
    void validate() const;
};

struct RefineResult {
    TexturedMesh mesh;
    std::vector<LossRecord> trace;
    std::vector<bool> observed; // per vertex: touched by at least one covered pixel
};

/// Optimizes vertex colors with Adam against recon_loss over the views in
/// round-robin order. A vertex is stepped only in views that see it (lazy Adam).
/// Geometry is never modified. Throws InputError when no view sees the mesh.
RefineResult refine_texture(const TexturedMesh& tm, const ViewSet& views, const RefineConfig& cfg,
                            const PerceptualLoss* perceptual = nullptr);

} // namespace mvr
