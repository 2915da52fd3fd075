// Copyright Contributors to the mvrecon Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "mvrecon/grid.hpp"
#include "mvrecon/image.hpp"

#include <optional>
#include <span>

namespace mvr {

/// Peak signal-to-noise ratio for unit-range images, capped at 100 dB.
double psnr(const Image& a, const Image& b);

/// Mean SSIM (11x11 Gaussian window, sigma 1.5).
double ssim_metric(const Image& a, const Image& b);

/// Symmetric Chamfer distance with squared distances:
/// mean_a min_b |a-b|^2 + mean_b min_a |a-b|^2.
/// Brute force when |A|*|B| <= 1e6, grid accelerated otherwise.
double chamfer(std::span<const Vec3> a, std::span<const Vec3> b);
double chamfer_bruteforce(std::span<const Vec3> a, std::span<const Vec3> b);
double chamfer_accelerated(std::span<const Vec3> a, std::span<const Vec3> b);

/// |A and B| / |A or B|, 1 when both are empty.
double mask_iou(const Mask& a, const Mask& b);

/// Fields of the metric report; absent metrics serialize as null.
struct MetricReport {
    std::optional<double> psnr;
    std::optional<double> ssim;
    std::optional<double> perceptual;
    std::optional<double> chamfer;
    std::optional<std::size_t> n_points;
};

} // namespace mvr
