// Copyright Contributors to the mvrecon Project
// SPDX-License-Identifier: Apache-2.0
//
#include "mvrecon/optim.hpp"

#include "mvrecon/error.hpp"
#include "mvrecon/nn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mvr {

namespace {

template <typename T>
std::span<double> flat(std::vector<T>& v) {
    return {reinterpret_cast<double*>(v.data()), v.size() * (sizeof(T) / sizeof(double))};
}

template <typename T>
std::span<const double> flat(const std::vector<T>& v) {
    return {reinterpret_cast<const double*>(v.data()), v.size() * (sizeof(T) / sizeof(double))};
}

void select_moments(AdamMoments& mom, const std::vector<bool>& keep, std::size_t width) {
    std::size_t out = 0;
    for (std::size_t i = 0; i < keep.size(); ++i) {
        if (!keep[i])
            continue;
        for (std::size_t k = 0; k < width; ++k) {
            mom.m[out * width + k] = mom.m[i * width + k];
            mom.v[out * width + k] = mom.v[i * width + k];
        }
        ++out;
    }
    mom.m.resize(out * width);
    mom.v.resize(out * width);
}

void check_finite(std::span<const double> grads, const char* group, std::size_t width) {
    for (std::size_t i = 0; i < grads.size(); ++i)
        if (!std::isfinite(grads[i]))
            throw NumericalError(std::string("adam: non-finite ") + group + " gradient at gaussian " +
                                 std::to_string(i / width));
}

} // namespace

void adam_update(std::span<double> params, std::span<const double> grads, AdamMoments& moments,
                 const AdamHyper& hyper, long step, double lr) {
    if (params.size() != grads.size() || moments.m.size() != params.size() || moments.v.size() != params.size())
        throw InputError("adam: parameter, gradient and moment sizes differ");
    if (step < 1)
        throw InputError("adam: step count starts at 1");
    for (std::size_t i = 0; i < grads.size(); ++i)
        if (!std::isfinite(grads[i]))
            throw NumericalError("adam: non-finite gradient at index " + std::to_string(i));

    const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        moments.m[i] = hyper.beta1 * moments.m[i] + (1.0 - hyper.beta1) * grads[i];
        moments.v[i] = hyper.beta2 * moments.v[i] + (1.0 - hyper.beta2) * grads[i] * grads[i];
        const double m_hat = moments.m[i] / bc1;
        const double v_hat = moments.v[i] / bc2;
        params[i] -= lr * m_hat / (std::sqrt(v_hat) + hyper.epsilon);
    }
}

void adam_update_rows(std::span<double> params, std::span<const double> grads, AdamMoments& moments,
                      std::span<long> row_steps, std::span<const std::uint32_t> rows, std::size_t width,
                      const AdamHyper& hyper, double lr) {
    if (params.size() != grads.size() || moments.m.size() != params.size() || moments.v.size() != params.size())
        throw InputError("adam: parameter, gradient and moment sizes differ");
    if (width == 0 || params.size() != row_steps.size() * width)
        throw InputError("adam: row layout does not match the parameter count");
    for (std::uint32_t r : rows) {
        if (r >= row_steps.size())
            throw InputError("adam: row " + std::to_string(r) + " out of range");
        for (std::size_t c = 0; c < width; ++c)
            if (!std::isfinite(grads[r * width + c]))
                throw NumericalError("adam: non-finite gradient at index " + std::to_string(r * width + c));
    }

    for (std::uint32_t r : rows) {
        const double t = static_cast<double>(++row_steps[r]);
        const double bc1 = 1.0 - std::pow(hyper.beta1, t);
        const double bc2 = 1.0 - std::pow(hyper.beta2, t);
        for (std::size_t i = r * width; i < (r + 1) * width; ++i) {
            moments.m[i] = hyper.beta1 * moments.m[i] + (1.0 - hyper.beta1) * grads[i];
            moments.v[i] = hyper.beta2 * moments.v[i] + (1.0 - hyper.beta2) * grads[i] * grads[i];
            params[i] -= lr * (moments.m[i] / bc1) / (std::sqrt(moments.v[i] / bc2) + hyper.epsilon);
        }
    }
}

void LearningRates::validate() const {
    for (double v : {position, log_scale, rotation, opacity, color})
        if (!(v > 0.0) || !std::isfinite(v))
            throw InputError("learning rates must be positive and finite");
}

AdamState::AdamState(std::size_t n)
    : positions(3 * n), log_scales(3 * n), rotations(4 * n), opacity_logits(n), colors(3 * n) {}

void AdamState::select(const std::vector<bool>& keep) {
    select_moments(positions, keep, 3);
    select_moments(log_scales, keep, 3);
    select_moments(rotations, keep, 4);
    select_moments(opacity_logits, keep, 1);
    select_moments(colors, keep, 3);
}

void adam_step(GaussianSet& gs, const GaussianGrads& grads, AdamState& state, const LearningRates& lr,
               double position_lr_scale) {
    if (grads.count() != gs.count() || state.count() != gs.count())
        throw InputError("adam: gradient or optimizer state does not match the Gaussian set");
    // Validate every group first so a failure leaves parameters and state untouched.
    check_finite(flat(grads.positions), "position", 3);
    check_finite(flat(grads.log_scales), "log_scale", 3);
    check_finite(flat(grads.rotations), "rotation", 4);
    check_finite(grads.opacity_logits, "opacity", 1);
    check_finite(flat(grads.colors), "color", 3);

    ++state.step;
    adam_update(flat(gs.positions), flat(grads.positions), state.positions, state.hyper, state.step,
                lr.position * position_lr_scale);
    adam_update(flat(gs.log_scales), flat(grads.log_scales), state.log_scales, state.hyper, state.step, lr.log_scale);
    adam_update(flat(gs.rotations), flat(grads.rotations), state.rotations, state.hyper, state.step, lr.rotation);
    adam_update(gs.opacity_logits, grads.opacity_logits, state.opacity_logits, state.hyper, state.step, lr.opacity);
    adam_update(flat(gs.colors), flat(grads.colors), state.colors, state.hyper, state.step, lr.color);

    for (Quat& q : gs.rotations)
        q.normalize();
    for (Rgb& c : gs.colors)
        c = c.cwiseMax(0.0).cwiseMin(1.0);
}

std::vector<bool> prune_mask(const GaussianSet& gs, double threshold) {
    std::vector<bool> keep(gs.count());
    for (std::size_t i = 0; i < gs.count(); ++i)
        keep[i] = sigmoid(gs.opacity_logits[i]) >= threshold;
    return keep;
}

GaussianSet prune(const GaussianSet& gs, double threshold) { return gs.select(prune_mask(gs, threshold)); }

void ReconConfig::validate() const {
    if (iterations < 0)
        throw InputError("reconstruct: iterations must be >= 0");
    lr.validate();
    if (prune_interval < 0)
        throw InputError("reconstruct: prune_interval must be >= 0 (0 disables pruning)");
    if (!(prune_opacity_threshold > 0.0 && prune_opacity_threshold < 1.0))
        throw InputError("reconstruct: prune threshold must lie in (0, 1)");
    weights.validate();
    if (!background.allFinite())
        throw InputError("reconstruct: background must be finite");
}

double scene_extent(std::span<const Vec3> points) {
    if (points.empty())
        return 0.0;
    Vec3 centroid = Vec3::Zero();
    for (const Vec3& p : points)
        centroid += p;
    centroid /= static_cast<double>(points.size());
    double r = 0.0;
    for (const Vec3& p : points)
        r = std::max(r, (p - centroid).norm());
    return r;
}

GaussianSet initialize_gaussians(const PointSet& init) {
    if (init.empty())
        throw InputError("reconstruct: initialization point set is empty");
    double spacing = mean_nearest_neighbor_distance(init.points);
    if (!(spacing > 0.0))
        spacing = 0.1;
    GaussianSet gs;
    Gaussian g;
    g.log_scale = Vec3::Constant(std::log(spacing));
    g.rotation = Quat(1, 0, 0, 0);
    g.opacity_logit = logit(0.1);
    g.color = Rgb::Constant(0.5);
    for (const Vec3& p : init.points) {
        g.position = p;
        gs.push_back(g);
    }
    return gs;
}

ReconResult reconstruct(const ViewSet& views, const PointSet& init, const ReconConfig& cfg,
                        const PerceptualLoss* perceptual, const ProgressFn& progress) {
    cfg.validate();
    if (views.size() < 2)
        throw InputError("reconstruct: at least two views are required");
    validate_views(views);

    ReconResult result;
    result.gaussians = initialize_gaussians(init);
    const double extent = std::max(scene_extent(init.points), 1e-6);
    AdamState state(result.gaussians.count());

    for (int it = 0; it < cfg.iterations; ++it) {
        const View& view = views[static_cast<std::size_t>(it) % views.size()];
        const RenderOutput render = rasterize(result.gaussians, view.camera, cfg.background, cfg.raster);
        const ReconLoss loss = recon_loss(render.color, view.image, cfg.weights, perceptual);
        if (!std::isfinite(loss.total))
            throw NumericalError("reconstruct: loss became non-finite at iteration " + std::to_string(it));
        const GaussianGrads grads =
            rasterize_backward(result.gaussians, view.camera, cfg.background, render, loss.grad, cfg.raster);
        adam_step(result.gaussians, grads, state, cfg.lr, extent);

        const LossRecord rec{it, loss.mse, loss.dssim, loss.perceptual, loss.total};
        result.trace.push_back(rec);

        if (cfg.prune_interval > 0 && (it + 1) % cfg.prune_interval == 0) {
            const std::vector<bool> keep = prune_mask(result.gaussians, cfg.prune_opacity_threshold);
            result.gaussians = result.gaussians.select(keep);
            state.select(keep);
        }
        if (progress)
            progress(rec, result.gaussians.count());
    }
    return result;
}

std::vector<double> smoothed_totals(const std::vector<LossRecord>& trace, std::size_t window) {
    std::vector<double> out;
    if (window == 0 || trace.size() < window)
        return out;
    double sum = 0.0;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        sum += trace[i].total;
        if (i >= window)
            sum -= trace[i - window].total;
        if (i + 1 >= window)
            out.push_back(sum / static_cast<double>(window));
    }
    return out;
}

} // namespace mvr
