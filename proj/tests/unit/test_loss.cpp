// Copyright Contributors to the mvrecon Project
// SPDX-License-Identifier: Apache-2.0
//
#include "fd_check.hpp"
#include "mvrecon/error.hpp"
#include "mvrecon/loss.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace mvr;
using mvr::testing::random_image;

namespace {

// Direct SSIM: for each valid window position, weighted moments summed explicitly.
double ssim_bruteforce(const Image& a, const Image& b) {
    const int n = 11;
    const double sigma = 1.5, c1 = 1e-4, c2 = 9e-4;
    double w1[11], norm = 0.0;
    for (int i = 0; i < n; ++i) {
        w1[i] = std::exp(-(i - 5.0) * (i - 5.0) / (2 * sigma * sigma));
        norm += w1[i];
    }
    double total = 0.0;
    int count = 0;
    for (int c = 0; c < a.channels(); ++c)
        for (int y0 = 0; y0 + n <= a.height(); ++y0)
            for (int x0 = 0; x0 + n <= a.width(); ++x0) {
                double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
                for (int j = 0; j < n; ++j)
                    for (int i = 0; i < n; ++i) {
                        const double w = w1[i] * w1[j] / (norm * norm);
                        const double va = a.at(x0 + i, y0 + j, c), vb = b.at(x0 + i, y0 + j, c);
                        ma += w * va;
                        mb += w * vb;
                        saa += w * va * va;
                        sbb += w * vb * vb;
                        sab += w * va * vb;
                    }
                const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
                total += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
                ++count;
            }
    return total / count;
}

Image shifted(const Image& img, int dx) {
    Image out = img;
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            for (int c = 0; c < img.channels(); ++c)
                out.at(x, y, c) = img.at(std::clamp(x - dx, 0, img.width() - 1), y, c);
    return out;
}

// Smooth random texture: a sum of a few random sinusoids, so a one-pixel shift is a
// small structural change.
Image smooth_texture(std::mt19937_64& rng, int w, int h) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Image img(w, h, 3);
    for (int c = 0; c < 3; ++c) {
        double fx[3], fy[3], ph[3];
        for (int k = 0; k < 3; ++k) {
            fx[k] = 0.05 + 0.2 * u(rng);
            fy[k] = 0.05 + 0.2 * u(rng);
            ph[k] = 6.28 * u(rng);
        }
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                double v = 0.5;
                for (int k = 0; k < 3; ++k)
                    v += 0.15 * std::sin(fx[k] * x + fy[k] * y + ph[k]);
                img.at(x, y, c) = v;
            }
    }
    return img;
}

} // namespace

TEST(Mse, IdentityAndConstants) {
    std::mt19937_64 rng(1);
    const Image a = random_image(rng, 8, 8);
    const LossValue same = mse(a, a);
    EXPECT_EQ(same.value, 0.0);
    for (double g : same.grad.data())
        EXPECT_EQ(g, 0.0);
    EXPECT_DOUBLE_EQ(mse(Image(8, 8, 3, 0.0), Image(8, 8, 3, 1.0)).value, 1.0);
    EXPECT_THROW(mse(Image(8, 8, 3), Image(8, 7, 3)), InputError);
}

TEST(Mse, MatchesDoubleLoopAndGradient) {
    std::mt19937_64 rng(2);
    const Image a = random_image(rng, 8, 8), b = random_image(rng, 8, 8);
    double s = 0.0;
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
            for (int c = 0; c < 3; ++c)
                s += std::pow(a.at(x, y, c) - b.at(x, y, c), 2);
    const LossValue m = mse(a, b);
    EXPECT_NEAR(m.value, s / 192.0, 1e-12);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
            EXPECT_NEAR(m.grad.at(x, y, 1), 2 * (a.at(x, y, 1) - b.at(x, y, 1)) / 192.0, 1e-15);
    EXPECT_EQ(mse(a, b).value, mse(b, a).value);
}

TEST(Dssim, IdentityIsZero) {
    std::mt19937_64 rng(3);
    const Image a = random_image(rng, 20, 17);
    EXPECT_NEAR(dssim(a, a).value, 0.0, 1e-15);
    EXPECT_NEAR(ssim(a, a), 1.0, 1e-15);
}

TEST(Dssim, ConstantZeroVersusOne) {
    const double c1 = 1e-4, c2 = 9e-4;
    const double s = (c1 * c2) / ((1 + c1) * c2);
    const double d = dssim(Image(16, 16, 3, 0.0), Image(16, 16, 3, 1.0)).value;
    EXPECT_NEAR(d, (1 - s) / 2, 1e-12);
    EXPECT_NEAR(d, 0.49995, 1e-6);
}

TEST(Dssim, MatchesDirectWindowSums) {
    std::mt19937_64 rng(4);
    const Image a = random_image(rng, 19, 14), b = random_image(rng, 19, 14);
    EXPECT_NEAR(ssim(a, b), ssim_bruteforce(a, b), 1e-12);
}

TEST(Dssim, SymmetricAndNonNegative) {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 5; ++t) {
        const Image a = random_image(rng, 16, 16), b = random_image(rng, 16, 16);
        EXPECT_NEAR(dssim(a, b).value, dssim(b, a).value, 1e-15);
        EXPECT_GE(dssim(a, b).value, 0.0);
    }
}

TEST(Dssim, SmallImagesThrow) {
    EXPECT_THROW(dssim(Image(10, 16, 3), Image(10, 16, 3)), InputError);
    EXPECT_THROW(dssim(Image(16, 16, 3), Image(16, 15, 3)), InputError);
}

TEST(Dssim, GradientMatchesFiniteDifferences) {
    for (int seed = 0; seed < 3; ++seed) {
        std::mt19937_64 rng(10 + seed);
        const Image a = random_image(rng, 16, 16), b = random_image(rng, 16, 16);
        const LossValue d = dssim(a, b);
        auto value = [&](const Image& x) { return dssim(x, b).value; };
        const auto t = mvr::testing::check_image_gradient(value, d.grad, a, rng, 200, 1e-3, 1e-3, 0.0);
        EXPECT_TRUE(t.passes(1.0)) << t.within_rel << "/" << t.checked << " worst " << t.worst_abs_of_rest;
    }
}

TEST(Perceptual, IdentityAndSymmetry) {
    std::mt19937_64 rng(6);
    const StructuralProxy p;
    const Image a = random_image(rng, 40, 33), b = random_image(rng, 40, 33);
    EXPECT_EQ(p.evaluate(a, a).value, 0.0);
    EXPECT_GT(p.evaluate(a, b).value, 0.0);
    EXPECT_NEAR(p.evaluate(a, b).value, p.evaluate(b, a).value, 1e-14);
    EXPECT_THROW(p.evaluate(a, random_image(rng, 40, 32)), InputError);
}

TEST(Perceptual, RanksAShiftAboveNoise) {
    const StructuralProxy p;
    for (int seed = 0; seed < 5; ++seed) {
        std::mt19937_64 rng(20 + seed);
        const Image a = smooth_texture(rng, 64, 64);
        // A random image with the same per-channel mean and variance.
        Image noise(64, 64, 3);
        for (int c = 0; c < 3; ++c) {
            double m = 0, v = 0;
            for (int y = 0; y < 64; ++y)
                for (int x = 0; x < 64; ++x)
                    m += a.at(x, y, c);
            m /= 4096;
            for (int y = 0; y < 64; ++y)
                for (int x = 0; x < 64; ++x)
                    v += std::pow(a.at(x, y, c) - m, 2);
            const double sd = std::sqrt(v / 4096);
            std::normal_distribution<double> nd(m, sd);
            for (int y = 0; y < 64; ++y)
                for (int x = 0; x < 64; ++x)
                    noise.at(x, y, c) = nd(rng);
        }
        EXPECT_LT(p.evaluate(a, shifted(a, 1)).value, p.evaluate(a, noise).value);
    }
}

TEST(Perceptual, GradientMatchesFiniteDifferences) {
    const StructuralProxy p;
    for (const int size : {16, 48}) {
        std::mt19937_64 rng(30 + size);
        const Image a = random_image(rng, size, size), b = random_image(rng, size, size);
        const LossValue v = p.evaluate(a, b);
        auto value = [&](const Image& x) { return p.evaluate(x, b).value; };
        // Small step: every sampled coordinate within the relative tolerance.
        std::mt19937_64 pick(1);
        const auto fine = mvr::testing::check_image_gradient(value, v.grad, a, pick, 200, 1e-4, 1e-3, 0.0);
        EXPECT_TRUE(fine.passes(1.0)) << size << ": " << fine.within_rel << "/" << fine.checked;
        // h = 1e-3: truncation error shows up only where the gradient itself is tiny.
        pick.seed(1);
        const auto coarse = mvr::testing::check_image_gradient(value, v.grad, a, pick, 200, 1e-3, 1e-3, 1e-5);
        EXPECT_TRUE(coarse.passes()) << size << ": " << coarse.within_rel << "/" << coarse.checked;
    }
}

TEST(ReconLoss, ReducesAndCombines) {
    std::mt19937_64 rng(7);
    const Image a = random_image(rng, 24, 24), b = random_image(rng, 24, 24);
    EXPECT_EQ(recon_loss(a, a, {}).total, 0.0);
    EXPECT_EQ(recon_loss(a, b, {0.0, 0.0}).total, mse(a, b).value);

    const StructuralProxy p;
    const ReconLoss r = recon_loss(a, b, {0.2, 0.5});
    const double expected = mse(a, b).value + 0.2 * dssim(a, b).value + 0.5 * p.evaluate(a, b).value;
    EXPECT_NEAR(r.total, expected, 1e-12);
    const Image gm = mse(a, b).grad, gs = dssim(a, b).grad, gp = p.evaluate(a, b).grad;
    for (std::size_t i = 0; i < r.grad.size(); ++i)
        EXPECT_NEAR(r.grad.data()[i], gm.data()[i] + 0.2 * gs.data()[i] + 0.5 * gp.data()[i], 1e-15);
}

TEST(ReconLoss, LinearInEachWeight) {
    std::mt19937_64 rng(8);
    const Image a = random_image(rng, 24, 24), b = random_image(rng, 24, 24);
    const double base = recon_loss(a, b, {0.3, 0.4}).total;
    EXPECT_NEAR(recon_loss(a, b, {0.6, 0.4}).total - base, 0.3 * dssim(a, b).value, 1e-10);
    EXPECT_NEAR(recon_loss(a, b, {0.3, 0.8}).total - base, 0.4 * StructuralProxy().evaluate(a, b).value, 1e-10);
}

TEST(ReconLoss, RejectsNegativeWeights) {
    const Image a(16, 16, 3, 0.5);
    EXPECT_THROW(recon_loss(a, a, {-0.1, 0.5}), InputError);
    EXPECT_THROW(recon_loss(a, a, {0.1, std::nan("")}), InputError);
}

namespace {
class ConstantLoss final : public PerceptualLoss {
  public:
    std::string name() const override { return "constant"; }
    LossValue evaluate(const Image& r, const Image&) const override { return {0.25, Image(r.width(), r.height(), r.channels(), 0.0)}; }
};
} // namespace

TEST(ReconLoss, AcceptsAlternativePerceptualTerms) {
    const Image a(16, 16, 3, 0.5);
    const ConstantLoss c;
    EXPECT_DOUBLE_EQ(recon_loss(a, a, {0.2, 2.0}, &c).total, 0.5);
}

TEST(Downsample, AveragesBlocks) {
    Image img(5, 4, 1);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 5; ++x)
            img.at(x, y, 0) = x + 10 * y;
    const Image d = downsample2(img);
    ASSERT_EQ(d.width(), 2);
    ASSERT_EQ(d.height(), 2);
    EXPECT_DOUBLE_EQ(d.at(0, 0, 0), (0 + 1 + 10 + 11) / 4.0);
    EXPECT_DOUBLE_EQ(d.at(1, 1, 0), (22 + 23 + 32 + 33) / 4.0);
}
