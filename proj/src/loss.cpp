// Copyright Contributors to the mvrecon Project
// SPDX-License-Identifier: Apache-2.0
//
#include "mvrecon/loss.hpp"

#include "mvrecon/error.hpp"

#include <cmath>
#include <vector>

namespace mvr {

namespace {

/// Single-channel plane, row-major.
struct Plane {
    int w = 0, h = 0;
    std::vector<double> v;
    Plane() = default;
    Plane(int w_, int h_, double fill = 0.0) : w(w_), h(h_), v(static_cast<std::size_t>(w_) * h_, fill) {}
    double& operator()(int x, int y) { return v[static_cast<std::size_t>(y) * w + x]; }
    double operator()(int x, int y) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

Plane channel(const Image& img, int c) {
    Plane p(img.width(), img.height());
    for (int y = 0; y < p.h; ++y)
        for (int x = 0; x < p.w; ++x)
            p(x, y) = img.at(x, y, c);
    return p;
}

void add_channel(Image& img, int c, const Plane& p, double scale = 1.0) {
    for (int y = 0; y < p.h; ++y)
        for (int x = 0; x < p.w; ++x)
            img.at(x, y, c) += scale * p(x, y);
}

std::vector<double> gaussian_window(int size, double sigma) {
    std::vector<double> w(size);
    double sum = 0.0;
    const double c = 0.5 * (size - 1);
    for (int i = 0; i < size; ++i) {
        w[i] = std::exp(-((i - c) * (i - c)) / (2.0 * sigma * sigma));
        sum += w[i];
    }
    for (double& x : w)
        x /= sum;
    return w;
}

// Separable "valid" filtering and its transpose.
Plane filter_valid(const Plane& in, const std::vector<double>& k) {
    const int n = static_cast<int>(k.size());
    Plane tmp(in.w - n + 1, in.h);
    for (int y = 0; y < tmp.h; ++y)
        for (int x = 0; x < tmp.w; ++x) {
            double s = 0.0;
            for (int i = 0; i < n; ++i)
                s += k[i] * in(x + i, y);
            tmp(x, y) = s;
        }
    Plane out(tmp.w, in.h - n + 1);
    for (int y = 0; y < out.h; ++y)
        for (int x = 0; x < out.w; ++x) {
            double s = 0.0;
            for (int i = 0; i < n; ++i)
                s += k[i] * tmp(x, y + i);
            out(x, y) = s;
        }
    return out;
}

Plane filter_valid_transpose(const Plane& in, const std::vector<double>& k) {
    const int n = static_cast<int>(k.size());
    Plane tmp(in.w, in.h + n - 1);
    for (int y = 0; y < in.h; ++y)
        for (int x = 0; x < in.w; ++x)
            for (int i = 0; i < n; ++i)
                tmp(x, y + i) += k[i] * in(x, y);
    Plane out(in.w + n - 1, tmp.h);
    for (int y = 0; y < tmp.h; ++y)
        for (int x = 0; x < tmp.w; ++x)
            for (int i = 0; i < n; ++i)
                out(x + i, y) += k[i] * tmp(x, y);
    return out;
}

Plane product(const Plane& a, const Plane& b) {
    Plane p(a.w, a.h);
    for (std::size_t i = 0; i < p.v.size(); ++i)
        p.v[i] = a.v[i] * b.v[i];
    return p;
}

/// Sum of SSIM over valid windows of one channel; optionally the gradient of that
/// sum with respect to `a`.
double ssim_channel(const Plane& a, const Plane& b, const SsimOptions& o, Plane* grad) {
    const std::vector<double> k = gaussian_window(o.window, o.sigma);
    const Plane mu_a = filter_valid(a, k);
    const Plane mu_b = filter_valid(b, k);
    const Plane e_aa = filter_valid(product(a, a), k);
    const Plane e_bb = filter_valid(product(b, b), k);
    const Plane e_ab = filter_valid(product(a, b), k);

    Plane c_mu, c_aa, c_ab;
    if (grad) {
        c_mu = Plane(mu_a.w, mu_a.h);
        c_aa = Plane(mu_a.w, mu_a.h);
        c_ab = Plane(mu_a.w, mu_a.h);
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < mu_a.v.size(); ++i) {
        const double ma = mu_a.v[i], mb = mu_b.v[i];
        const double var_a = e_aa.v[i] - ma * ma;
        const double var_b = e_bb.v[i] - mb * mb;
        const double cov = e_ab.v[i] - ma * mb;
        const double a1 = 2.0 * ma * mb + o.c1;
        const double a2 = 2.0 * cov + o.c2;
        const double b1 = ma * ma + mb * mb + o.c1;
        const double b2 = var_a + var_b + o.c2;
        const double s = (a1 * a2) / (b1 * b2);
        sum += s;
        if (grad) {
            const double inv = 1.0 / (b1 * b2);
            c_mu.v[i] = 2.0 * mb * a2 * inv - 2.0 * ma * s / b1 + 2.0 * ma * s / b2 - 2.0 * mb * a1 * inv;
            c_aa.v[i] = -s / b2;
            c_ab.v[i] = 2.0 * a1 * inv;
        }
    }
    if (grad) {
        const Plane t_mu = filter_valid_transpose(c_mu, k);
        const Plane t_aa = filter_valid_transpose(c_aa, k);
        const Plane t_ab = filter_valid_transpose(c_ab, k);
        *grad = Plane(a.w, a.h);
        for (std::size_t i = 0; i < a.v.size(); ++i)
            grad->v[i] = t_mu.v[i] + 2.0 * a.v[i] * t_aa.v[i] + b.v[i] * t_ab.v[i];
    }
    return sum;
}

void check_ssim_size(const Image& img, const SsimOptions& o) {
    if (o.window < 1 || o.window % 2 == 0)
        throw InputError("ssim: window must be a positive odd size");
    if (img.width() < o.window || img.height() < o.window)
        throw InputError("ssim: image is smaller than the " + std::to_string(o.window) + "px window");
}

/// Mean SSIM and (optionally) its gradient with respect to `a`.
double mean_ssim(const Image& a, const Image& b, const SsimOptions& o, Image* grad) {
    require_same_shape(a, b, "ssim");
    check_ssim_size(a, o);
    const double n_win =
        static_cast<double>(a.width() - o.window + 1) * (a.height() - o.window + 1) * a.channels();
    double total = 0.0;
    if (grad)
        *grad = Image(a.width(), a.height(), a.channels());
    for (int c = 0; c < a.channels(); ++c) {
        Plane g;
        total += ssim_channel(channel(a, c), channel(b, c), o, grad ? &g : nullptr);
        if (grad)
            add_channel(*grad, c, g, 1.0 / n_win);
    }
    return total / n_win;
}

double robust(double d) { return std::sqrt(d * d + StructuralProxy::kRobustEps * StructuralProxy::kRobustEps) - StructuralProxy::kRobustEps; }
double robust_grad(double d) { return d / std::sqrt(d * d + StructuralProxy::kRobustEps * StructuralProxy::kRobustEps); }

/// Sobel responses (scaled so a unit step has magnitude 1) on interior pixels.
void sobel(const Plane& p, Plane& gx, Plane& gy) {
    gx = Plane(p.w - 2, p.h - 2);
    gy = Plane(p.w - 2, p.h - 2);
    for (int y = 0; y < gx.h; ++y)
        for (int x = 0; x < gx.w; ++x) {
            gx(x, y) = 0.25 * ((p(x + 2, y) - p(x, y)) + 2.0 * (p(x + 2, y + 1) - p(x, y + 1)) +
                               (p(x + 2, y + 2) - p(x, y + 2)));
            gy(x, y) = 0.25 * ((p(x, y + 2) - p(x, y)) + 2.0 * (p(x + 1, y + 2) - p(x + 1, y)) +
                               (p(x + 2, y + 2) - p(x + 2, y)));
        }
}

/// Mean robust difference of Sobel magnitudes over interior pixels and channels.
LossValue gradient_magnitude_term(const Image& a, const Image& b) {
    LossValue out;
    out.grad = Image(a.width(), a.height(), a.channels());
    const double eps2 = StructuralProxy::kRobustEps * StructuralProxy::kRobustEps;
    const double n = static_cast<double>(a.width() - 2) * (a.height() - 2) * a.channels();
    for (int c = 0; c < a.channels(); ++c) {
        const Plane pa = channel(a, c), pb = channel(b, c);
        Plane ax, ay, bx, by;
        sobel(pa, ax, ay);
        sobel(pb, bx, by);
        Plane dgx(ax.w, ax.h), dgy(ax.w, ax.h);
        for (std::size_t i = 0; i < ax.v.size(); ++i) {
            const double ma = std::sqrt(ax.v[i] * ax.v[i] + ay.v[i] * ay.v[i] + eps2);
            const double mb = std::sqrt(bx.v[i] * bx.v[i] + by.v[i] * by.v[i] + eps2);
            out.value += robust(ma - mb);
            const double d = robust_grad(ma - mb) / n;
            dgx.v[i] = d * ax.v[i] / ma;
            dgy.v[i] = d * ay.v[i] / ma;
        }
        // Transpose of the Sobel operators.
        for (int y = 0; y < dgx.h; ++y)
            for (int x = 0; x < dgx.w; ++x) {
                const double gx = 0.25 * dgx(x, y), gy = 0.25 * dgy(x, y);
                out.grad.at(x + 2, y, c) += gx;
                out.grad.at(x, y, c) -= gx;
                out.grad.at(x + 2, y + 1, c) += 2.0 * gx;
                out.grad.at(x, y + 1, c) -= 2.0 * gx;
                out.grad.at(x + 2, y + 2, c) += gx;
                out.grad.at(x, y + 2, c) -= gx;
                out.grad.at(x, y + 2, c) += gy;
                out.grad.at(x, y, c) -= gy;
                out.grad.at(x + 1, y + 2, c) += 2.0 * gy;
                out.grad.at(x + 1, y, c) -= 2.0 * gy;
                out.grad.at(x + 2, y + 2, c) += gy;
                out.grad.at(x + 2, y, c) -= gy;
            }
    }
    out.value /= n;
    return out;
}

LossValue robust_abs_term(const Image& a, const Image& b) {
    LossValue out;
    out.grad = Image(a.width(), a.height(), a.channels());
    const double n = static_cast<double>(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.data()[i] - b.data()[i];
        out.value += robust(d);
        out.grad.data()[i] = robust_grad(d) / n;
    }
    out.value /= n;
    return out;
}

/// Gradient of downsample2 pulled back to the finer level.
Image upsample_grad(const Image& coarse_grad, int fine_w, int fine_h) {
    Image g(fine_w, fine_h, coarse_grad.channels());
    for (int y = 0; y < coarse_grad.height(); ++y)
        for (int x = 0; x < coarse_grad.width(); ++x)
            for (int c = 0; c < g.channels(); ++c) {
                const double v = 0.25 * coarse_grad.at(x, y, c);
                g.at(2 * x, 2 * y, c) += v;
                g.at(2 * x + 1, 2 * y, c) += v;
                g.at(2 * x, 2 * y + 1, c) += v;
                g.at(2 * x + 1, 2 * y + 1, c) += v;
            }
    return g;
}

} // namespace

LossValue mse(const Image& rendered, const Image& target) {
    require_same_shape(rendered, target, "mse");
    LossValue out;
    out.grad = Image(rendered.width(), rendered.height(), rendered.channels());
    const std::size_t n = rendered.size();
    if (n == 0)
        return out;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = rendered.data()[i] - target.data()[i];
        out.value += d * d;
        out.grad.data()[i] = 2.0 * d / static_cast<double>(n);
    }
    out.value /= static_cast<double>(n);
    return out;
}

double ssim(const Image& a, const Image& b, const SsimOptions& opts) { return mean_ssim(a, b, opts, nullptr); }

LossValue dssim(const Image& rendered, const Image& target, const SsimOptions& opts) {
    LossValue out;
    Image g;
    const double s = mean_ssim(rendered, target, opts, &g);
    out.value = 0.5 * (1.0 - s);
    for (double& v : g.data())
        v *= -0.5;
    out.grad = std::move(g);
    return out;
}

Image downsample2(const Image& img) {
    Image out(img.width() / 2, img.height() / 2, img.channels());
    for (int y = 0; y < out.height(); ++y)
        for (int x = 0; x < out.width(); ++x)
            for (int c = 0; c < img.channels(); ++c)
                out.at(x, y, c) = 0.25 * (img.at(2 * x, 2 * y, c) + img.at(2 * x + 1, 2 * y, c) +
                                          img.at(2 * x, 2 * y + 1, c) + img.at(2 * x + 1, 2 * y + 1, c));
    return out;
}

LossValue StructuralProxy::evaluate(const Image& rendered, const Image& target) const {
    require_same_shape(rendered, target, "perceptual");
    if (rendered.width() < 3 || rendered.height() < 3)
        throw InputError("perceptual: images must be at least 3x3");

    std::vector<Image> pyr_a{rendered}, pyr_b{target};
    while (static_cast<int>(pyr_a.size()) < kLevels && pyr_a.back().width() / 2 >= 3 &&
           pyr_a.back().height() / 2 >= 3) {
        pyr_a.push_back(downsample2(pyr_a.back()));
        pyr_b.push_back(downsample2(pyr_b.back()));
    }
    const double level_weight = 1.0 / static_cast<double>(pyr_a.size());
    const SsimOptions ssim_opts;

    LossValue out;
    Image carry; // gradient flowing down from coarser levels
    for (std::size_t l = pyr_a.size(); l-- > 0;) {
        const Image& a = pyr_a[l];
        const Image& b = pyr_b[l];
        const bool fits_window = a.width() >= ssim_opts.window && a.height() >= ssim_opts.window;
        LossValue structure = fits_window ? dssim(a, b, ssim_opts) : robust_abs_term(a, b);
        const LossValue edges = gradient_magnitude_term(a, b);
        out.value += level_weight * (structure.value + edges.value);

        Image g(a.width(), a.height(), a.channels());
        for (std::size_t i = 0; i < g.size(); ++i)
            g.data()[i] = level_weight * (structure.grad.data()[i] + edges.grad.data()[i]) +
                          (carry.empty() ? 0.0 : carry.data()[i]);
        carry = l > 0 ? upsample_grad(g, pyr_a[l - 1].width(), pyr_a[l - 1].height()) : std::move(g);
    }
    out.grad = std::move(carry);
    return out;
}

void LossWeights::validate() const {
    if (!std::isfinite(lambda_s) || !std::isfinite(lambda_l) || lambda_s < 0.0 || lambda_l < 0.0)
        throw InputError("loss weights must be finite and non-negative");
}

ReconLoss recon_loss(const Image& rendered, const Image& target, const LossWeights& weights,
                     const PerceptualLoss* perceptual) {
    weights.validate();
    static const StructuralProxy default_proxy;
    const PerceptualLoss& p = perceptual ? *perceptual : default_proxy;

    const LossValue m = mse(rendered, target);
    const LossValue s = dssim(rendered, target);
    const LossValue l = p.evaluate(rendered, target);
    ReconLoss out;
    out.mse = m.value;
    out.dssim = s.value;
    out.perceptual = l.value;
    out.total = m.value + weights.lambda_s * s.value + weights.lambda_l * l.value;
    out.grad = Image(rendered.width(), rendered.height(), rendered.channels());
    // Identical images are the minimum of every term: return the exact zero gradient,
    // not the roundoff of the D-SSIM and perceptual backward passes, which Adam would
    // otherwise normalize into full-size steps.
    if (rendered.data() == target.data())
        return out;
    for (std::size_t i = 0; i < out.grad.size(); ++i)
        out.grad.data()[i] = m.grad.data()[i] + weights.lambda_s * s.grad.data()[i] + weights.lambda_l * l.grad.data()[i];
    return out;
}

} // namespace mvr
