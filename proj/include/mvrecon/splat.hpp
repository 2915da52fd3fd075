// Copyright Contributors to the mvrecon Project
// SPDX-License-Identifier: Apache-2.0
//
// Differentiable 3D Gaussian splatting on the CPU.
//
// Each Gaussian is projected with the first-order (EWA) approximation, all visible
// Gaussians are depth sorted once per image (ties by index) and composited front to
// back per pixel:
//
//   C = sum_i c_i a_i prod_{j<i} (1 - a_j) + background * prod_j (1 - a_j)
//   a_i = sigmoid(opacity_logit_i) * exp(-0.5 d^T cov2d_i^{-1} d)
//
// Contributions with a_i below min_alpha are skipped and a pixel stops once its
// transmittance drops below min_transmittance.
#pragma once

#include "mvrecon/geom.hpp"
#include "mvrecon/image.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <vector>

namespace mvr {

using Quat = Eigen::Vector4d; // (w, x, y, z)

struct Gaussian {
    Vec3 position = Vec3::Zero();
    Vec3 log_scale = Vec3::Constant(-4.0);
    Quat rotation = Quat(1, 0, 0, 0);
    double opacity_logit = 0.0;
    Rgb color = Rgb::Constant(0.5);
};

/// Structure-of-arrays Gaussian storage; all arrays have count() entries.
struct GaussianSet {
    std::vector<Vec3> positions;
    std::vector<Vec3> log_scales;
    std::vector<Quat> rotations;
    std::vector<double> opacity_logits;
    std::vector<Rgb> colors;

    std::size_t count() const { return positions.size(); }
    bool empty() const { return positions.empty(); }
    void push_back(const Gaussian& g);
    Gaussian at(std::size_t i) const;
    /// Throws InputError on mismatched array lengths or non-finite parameters.
    void validate() const;
    /// Keeps the entries whose flag is set, preserving order.
    GaussianSet select(const std::vector<bool>& keep) const;
};

/// Gradient of a scalar loss with respect to every field of a GaussianSet.
struct GaussianGrads {
    std::vector<Vec3> positions;
    std::vector<Vec3> log_scales;
    std::vector<Quat> rotations;
    std::vector<double> opacity_logits;
    std::vector<Rgb> colors;

    explicit GaussianGrads(std::size_t n = 0);
    std::size_t count() const { return positions.size(); }
};

double sigmoid(double x);
double logit(double p);

/// Rotation matrix of a quaternion; the quaternion is normalized first.
Mat3 quat_to_matrix(const Quat& q);

struct RasterSettings {
    double min_alpha = 1.0 / 255.0;
    double min_transmittance = 1e-4;
    double cov2d_epsilon = 0.3; // px^2 added to the projected covariance diagonal
    int tile_size = 16;
};

/// Screen-space footprint of one Gaussian.
struct Splat2D {
    Vec2 mean;
    Eigen::Matrix2d cov;  // regularized, SPD
    Eigen::Vector3d conic; // (a, b, c) of cov^{-1} = [[a, b], [b, c]]
    double depth = 0.0;
};

/// EWA projection of a single Gaussian. Empty when the center is behind the near
/// plane or the 99%-mass ellipse lies entirely outside the image.
std::optional<Splat2D> project_gaussian(const Gaussian& g, const Camera& cam, const RasterSettings& settings = {});

/// Per-pixel compositing record: which Gaussian (as a position in the tile's list)
/// contributed, with its alpha and the transmittance in front of it.
struct Contribution {
    std::uint32_t slot;
    double alpha;
    double transmittance;
};

struct TileRecords {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // pixel bounds [x0, x1) x [y0, y1)
    std::vector<std::uint32_t> gaussians; // depth-ordered Gaussian indices overlapping the tile
    std::vector<std::uint32_t> pixel_offsets; // CSR offsets into contributions, row-major in the tile
    std::vector<Contribution> contributions;
};

struct RenderAux {
    std::vector<std::optional<Splat2D>> splats; // per Gaussian; empty when culled
    std::vector<std::uint32_t> depth_order;      // visible Gaussians, front to back
    std::vector<TileRecords> tiles;
};

struct RenderOutput {
    Image color; // H x W x 3
    Image alpha; // H x W x 1, accumulated opacity 1 - prod(1 - a)
    RenderAux aux;
};

RenderOutput rasterize(const GaussianSet& gs, const Camera& cam, const Rgb& background,
                       const RasterSettings& settings = {});

/// Gradients of a loss L(color image) given dL/dImage (H x W x 3), reusing the
/// forward pass records.
GaussianGrads rasterize_backward(const GaussianSet& gs, const Camera& cam, const Rgb& background,
                                 const RenderOutput& forward, const Image& grad_color,
                                 const RasterSettings& settings = {});

/// Same, recomputing the forward pass.
GaussianGrads rasterize_backward(const GaussianSet& gs, const Camera& cam, const Rgb& background,
                                 const Image& grad_color, const RasterSettings& settings = {});

} // namespace mvr
