// Copyright Contributors to the mvrecon Project
// SPDX-License-Identifier: Apache-2.0
//
// Central finite-difference oracles shared by the unit and acceptance tests.
#pragma once

#include "mvrecon/image.hpp"
#include "mvrecon/splat.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace mvr::testing {

/// Scalar parameters per Gaussian: position(3), log_scale(3), rotation(4), opacity(1), color(3).
inline constexpr int kParamsPerGaussian = 14;

inline double& param(GaussianSet& gs, std::size_t i, int k) {
    if (k < 3)
        return gs.positions[i][k];
    if (k < 6)
        return gs.log_scales[i][k - 3];
    if (k < 10)
        return gs.rotations[i][k - 6];
    if (k == 10)
        return gs.opacity_logits[i];
    return gs.colors[i][k - 11];
}

inline double grad_param(const GaussianGrads& g, std::size_t i, int k) {
    if (k < 3)
        return g.positions[i][k];
    if (k < 6)
        return g.log_scales[i][k - 3];
    if (k < 10)
        return g.rotations[i][k - 6];
    if (k == 10)
        return g.opacity_logits[i];
    return g.colors[i][k - 11];
}

/// Relative error |a - f| / max(|a|, |f|), zero when both vanish.
inline double relative_error(double a, double f) {
    const double s = std::max(std::abs(a), std::abs(f));
    return s == 0.0 ? 0.0 : std::abs(a - f) / s;
}

struct FdTally {
    int checked = 0;
    int within_rel = 0;   // rel-err < rel_tol
    int within_abs = 0;   // rel-err >= rel_tol but abs-err < abs_tol
    int failed = 0;       // neither
    int skipped = 0;      // loss not smooth on [p-h, p+h]
    double worst_abs_of_rest = 0.0;

    void add(double analytic, double fd, double rel_tol, double abs_tol) {
        ++checked;
        const double abs_err = std::abs(analytic - fd);
        if (relative_error(analytic, fd) < rel_tol) {
            ++within_rel;
        } else {
            worst_abs_of_rest = std::max(worst_abs_of_rest, abs_err);
            if (abs_err < abs_tol)
                ++within_abs;
            else
                ++failed;
        }
    }
    FdTally& operator+=(const FdTally& o) {
        checked += o.checked;
        within_rel += o.within_rel;
        within_abs += o.within_abs;
        failed += o.failed;
        skipped += o.skipped;
        worst_abs_of_rest = std::max(worst_abs_of_rest, o.worst_abs_of_rest);
        return *this;
    }
    double rel_fraction() const { return checked == 0 ? 1.0 : static_cast<double>(within_rel) / checked; }
    /// The acceptance rule: >= 95% within the relative tolerance, the rest within the absolute one.
    bool passes(double fraction = 0.95) const { return checked > 0 && failed == 0 && rel_fraction() >= fraction; }
};

/// Contributor lists of every pixel, in compositing order. Two renders with equal
/// signatures lie on the same smooth branch of the rasterizer.
inline std::vector<std::uint32_t> contributor_signature(const RenderOutput& out) {
    std::vector<std::uint32_t> sig;
    for (const TileRecords& t : out.aux.tiles) {
        for (std::size_t p = 0; p + 1 < t.pixel_offsets.size(); ++p) {
            for (std::uint32_t r = t.pixel_offsets[p]; r < t.pixel_offsets[p + 1]; ++r)
                sig.push_back(t.gaussians[t.contributions[r].slot]);
            sig.push_back(0xffffffffu);
        }
    }
    return sig;
}

/// A random scene of `n` Gaussians in front of a 32x32 orbit camera, separated in
/// depth so that no perturbation of size h reorders them.
inline GaussianSet random_scene(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> n01;
    GaussianSet gs;
    for (int i = 0; i < n; ++i) {
        Gaussian g;
        g.position = Vec3(0.5 * u(rng) - 0.25, 0.5 * u(rng) - 0.25, 0.5 * u(rng) - 0.25);
        for (int k = 0; k < 3; ++k)
            g.log_scale[k] = std::log(0.04 + 0.11 * u(rng));
        g.rotation = Quat(n01(rng), n01(rng), n01(rng), n01(rng)).normalized();
        g.opacity_logit = -1.0 + 3.0 * u(rng);
        g.color = Rgb(u(rng), u(rng), u(rng));
        gs.push_back(g);
    }
    return gs;
}

/// Scalar image loss with its gradient at the rendered image.
struct ImageObjective {
    std::function<double(const Image&)> value;
    std::function<Image(const Image&)> grad;
};

/// sum(weights * image): every pixel's upstream gradient is an independent weight.
inline ImageObjective weighted_sum(const Image& weights) {
    return {[weights](const Image& r) {
                double s = 0.0;
                for (std::size_t i = 0; i < r.size(); ++i)
                    s += weights.data()[i] * r.data()[i];
                return s;
            },
            [weights](const Image&) { return weights; }};
}

/// Mean squared error to a fixed target, the data term the optimizer uses.
inline ImageObjective mean_squared_error(const Image& target) {
    return {[target](const Image& r) {
                double s = 0.0;
                for (std::size_t i = 0; i < r.size(); ++i)
                    s += (r.data()[i] - target.data()[i]) * (r.data()[i] - target.data()[i]);
                return s / static_cast<double>(r.size());
            },
            [target](const Image& r) {
                Image g(r.width(), r.height(), r.channels());
                for (std::size_t i = 0; i < r.size(); ++i)
                    g.data()[i] = 2.0 * (r.data()[i] - target.data()[i]) / static_cast<double>(r.size());
                return g;
            }};
}

/// Finite-difference check of rasterize_backward for every parameter of every visible
/// Gaussian. Coordinates whose perturbation changes any pixel's contributor list (a
/// Gaussian crossing the 1/255 cutoff, the early-out, culling or the depth order) are
/// counted as skipped: the loss is discontinuous there and a difference quotient has
/// no derivative to approximate.
inline FdTally check_splat_gradients(const GaussianSet& scene, const Camera& cam, const Rgb& bg,
                                     const RasterSettings& settings, const ImageObjective& objective, double h,
                                     double rel_tol, double abs_tol) {
    const RenderOutput base = rasterize(scene, cam, bg, settings);
    const auto base_sig = contributor_signature(base);
    const GaussianGrads grads = rasterize_backward(scene, cam, bg, base, objective.grad(base.color), settings);
    FdTally tally;
    GaussianSet work = scene;
    for (std::size_t i = 0; i < scene.count(); ++i) {
        if (!base.aux.splats[i])
            continue;
        for (int k = 0; k < kParamsPerGaussian; ++k) {
            double& p = param(work, i, k);
            const double p0 = p;
            p = p0 + h;
            const RenderOutput plus = rasterize(work, cam, bg, settings);
            p = p0 - h;
            const RenderOutput minus = rasterize(work, cam, bg, settings);
            p = p0;
            if (contributor_signature(plus) != base_sig || contributor_signature(minus) != base_sig) {
                ++tally.skipped;
                continue;
            }
            const double fd = (objective.value(plus.color) - objective.value(minus.color)) / (2.0 * h);
            tally.add(grad_param(grads, i, k), fd, rel_tol, abs_tol);
        }
    }
    return tally;
}

/// Finite-difference check of an image loss gradient on `samples` random pixel coordinates.
inline FdTally check_image_gradient(const std::function<double(const Image&)>& value, const Image& grad,
                                    Image at, std::mt19937_64& rng, int samples, double h, double rel_tol,
                                    double abs_tol) {
    FdTally tally;
    std::uniform_int_distribution<std::size_t> pick(0, at.size() - 1);
    for (int s = 0; s < samples; ++s) {
        const std::size_t idx = pick(rng);
        double& v = at.data()[idx];
        const double v0 = v;
        v = v0 + h;
        const double lp = value(at);
        v = v0 - h;
        const double lm = value(at);
        v = v0;
        tally.add(grad.data()[idx], (lp - lm) / (2.0 * h), rel_tol, abs_tol);
    }
    return tally;
}

inline Image random_image(std::mt19937_64& rng, int w, int h, int c = 3, double lo = 0.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Image img(w, h, c);
    for (double& v : img.data())
        v = u(rng);
    return img;
}

} // namespace mvr::testing
