// Copyright Contributors to the mvrecon Project
// SPDX-License-Identifier: Apache-2.0
//
// Image losses used for reconstruction. Every term returns its value together with
// the gradient with respect to the first (rendered) image. Images are floats in [0,1]
// with any number of channels; channels are treated independently and averaged.
#pragma once

#include "mvrecon/image.hpp"

#include <memory>
#include <string>

namespace mvr {

struct LossValue {
    double value = 0.0;
    Image grad; // d value / d rendered image
};

/// Mean squared difference over all pixels and channels.
LossValue mse(const Image& rendered, const Image& target);

struct SsimOptions {
    int window = 11;
    double sigma = 1.5;
    double c1 = 0.01 * 0.01;
    double c2 = 0.03 * 0.03;
};

/// Mean SSIM over all fully contained windows and all channels.
double ssim(const Image& a, const Image& b, const SsimOptions& opts = {});

/// (1 - mean SSIM) / 2 and its gradient. Throws InputError when the image is smaller
/// than the window.
LossValue dssim(const Image& rendered, const Image& target, const SsimOptions& opts = {});

/// Pluggable perceptual distance. Implementations must be non-negative, zero for
/// identical inputs and differentiable in the rendered image.
class PerceptualLoss {
  public:
    virtual ~PerceptualLoss() = default;
    virtual std::string name() const = 0;
    virtual LossValue evaluate(const Image& rendered, const Image& target) const = 0;
};

/// Weight-free structural proxy: a 3-level 2x average pyramid; each level scores
/// D-SSIM plus the mean robust difference of Sobel gradient magnitudes, and the level
/// scores are averaged. Levels smaller than the SSIM window use a robust mean absolute
/// intensity difference in place of D-SSIM.
class StructuralProxy final : public PerceptualLoss {
  public:
    static constexpr int kLevels = 3;
    static constexpr double kRobustEps = 1e-3; // sqrt(d^2 + eps^2) - eps

    std::string name() const override { return "structural-proxy"; }
    LossValue evaluate(const Image& rendered, const Image& target) const override;
};

struct LossWeights {
    double lambda_s = 0.2; // D-SSIM
    double lambda_l = 0.5; // perceptual
    void validate() const;
};

struct ReconLoss {
    double mse = 0.0;
    double dssim = 0.0;
    double perceptual = 0.0;
    double total = 0.0;
    Image grad;
};

/// mse + lambda_s * dssim + lambda_l * perceptual. Uses StructuralProxy when no
/// perceptual implementation is given.
ReconLoss recon_loss(const Image& rendered, const Image& target, const LossWeights& weights,
                     const PerceptualLoss* perceptual = nullptr);

/// 2x2 average downsample (odd trailing row/column dropped).
Image downsample2(const Image& img);

} // namespace mvr
