// Copyright Contributors to the mvrecon Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "mvrecon/grid.hpp"
#include "mvrecon/loss.hpp"
#include "mvrecon/splat.hpp"
#include "mvrecon/views.hpp"

#include <functional>
#include <span>
#include <vector>

namespace mvr {

struct AdamHyper {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-15;
};

/// First and second moments for one flat parameter array.
struct AdamMoments {
    std::vector<double> m;
    std::vector<double> v;
    explicit AdamMoments(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

/// One bias-corrected Adam update at 1-based step `step`. Validates shapes and
/// finiteness before touching any state; a non-finite gradient raises NumericalError
/// naming its index.
void adam_update(std::span<double> params, std::span<const double> grads, AdamMoments& moments,
                 const AdamHyper& hyper, long step, double lr);

/// Lazy Adam over rows of `width` parameters: only the listed (distinct) rows are
/// updated, each with its own 1-based step counter in `row_steps`. Other rows keep
/// their values and moments, so momentum does not carry them while unobserved.
void adam_update_rows(std::span<double> params, std::span<const double> grads, AdamMoments& moments,
                      std::span<long> row_steps, std::span<const std::uint32_t> rows, std::size_t width,
                      const AdamHyper& hyper, double lr);

struct LearningRates {
    double position = 2e-4; // multiplied by the scene extent
    double log_scale = 5e-3;
    double rotation = 1e-3;
    double opacity = 5e-2;
    double color = 1e-2;
    void validate() const;
};

/// Adam state for every parameter group of a GaussianSet.
struct AdamState {
    AdamHyper hyper;
    long step = 0;
    AdamMoments positions, log_scales, rotations, opacity_logits, colors;

    explicit AdamState(std::size_t n = 0);
    std::size_t count() const { return opacity_logits.m.size(); }
    /// Drops the moments of Gaussians whose flag is false.
    void select(const std::vector<bool>& keep);
};

/// Applies one Adam step to all groups, then renormalizes quaternions and clamps
/// colors to [0,1]. `position_lr_scale` multiplies the position learning rate.
void adam_step(GaussianSet& gs, const GaussianGrads& grads, AdamState& state, const LearningRates& lr,
               double position_lr_scale = 1.0);

/// Keeps exactly the Gaussians with sigmoid(opacity_logit) >= threshold, in order.
GaussianSet prune(const GaussianSet& gs, double threshold);
std::vector<bool> prune_mask(const GaussianSet& gs, double threshold);

struct ReconConfig {
    int iterations = 2000;
    LearningRates lr;
    int prune_interval = 500;
    double prune_opacity_threshold = 0.05;
    LossWeights weights;
    Rgb background = Rgb::Ones();
    RasterSettings raster;
    void validate() const;
};

struct LossRecord {
    int iteration = 0;
    double mse = 0.0;
    double dssim = 0.0;
    double perceptual = 0.0;
    double total = 0.0;
};

struct ReconResult {
    GaussianSet gaussians;
    std::vector<LossRecord> trace;
};

/// Gaussians placed at the initialization points: isotropic scale equal to the mean
/// nearest-neighbour spacing, opacity 0.1, mid-gray color, identity rotation.
GaussianSet initialize_gaussians(const PointSet& init);

/// Distance of the farthest point from the centroid. Scales the position learning rate.
double scene_extent(std::span<const Vec3> points);

using ProgressFn = std::function<void(const LossRecord&, std::size_t n_gaussians)>;

/// Round-robin Adam optimization of recon_loss over the views, pruning transparent
/// Gaussians every prune_interval iterations.
ReconResult reconstruct(const ViewSet& views, const PointSet& init, const ReconConfig& cfg,
                        const PerceptualLoss* perceptual = nullptr, const ProgressFn& progress = {});

/// Moving average of the total loss over `window` records (valid part only).
std::vector<double> smoothed_totals(const std::vector<LossRecord>& trace, std::size_t window);

} // namespace mvr
