// Copyright Contributors to the mvrecon Project
// SPDX-License-Identifier: Apache-2.0
//
#include "mvrecon/eval.hpp"

#include "mvrecon/error.hpp"
#include "mvrecon/loss.hpp"
#include "mvrecon/nn.hpp"
#include "mvrecon/parallel.hpp"

#include <cmath>
#include <limits>

namespace mvr {

double psnr(const Image& a, const Image& b) {
    const double m = mse(a, b).value;
    if (m < 1e-10)
        return 100.0;
    return 10.0 * std::log10(1.0 / m);
}

double ssim_metric(const Image& a, const Image& b) { return ssim(a, b); }

namespace {

void require_nonempty(std::span<const Vec3> a, std::span<const Vec3> b) {
    if (a.empty() || b.empty())
        throw InputError("chamfer: both point sets must be non-empty");
}

/// Mean over `queries` of the squared distance to the nearest reference point.
template <typename Nearest>
double mean_nearest(std::span<const Vec3> queries, Nearest&& nearest) {
    std::vector<double> d(queries.size());
    parallel_for(0, queries.size(), 2048, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i)
            d[i] = nearest(queries[i]);
    });
    double sum = 0.0;
    for (double v : d)
        sum += v;
    return sum / static_cast<double>(queries.size());
}

double brute_one_sided(std::span<const Vec3> queries, std::span<const Vec3> ref) {
    return mean_nearest(queries, [&](const Vec3& q) {
        double best = std::numeric_limits<double>::infinity();
        for (const Vec3& r : ref)
            best = std::min(best, (r - q).squaredNorm());
        return best;
    });
}

double grid_one_sided(std::span<const Vec3> queries, std::span<const Vec3> ref) {
    const PointGrid index(ref);
    return mean_nearest(queries, [&](const Vec3& q) { return index.nearest(q).squared_distance; });
}

} // namespace

double chamfer_bruteforce(std::span<const Vec3> a, std::span<const Vec3> b) {
    require_nonempty(a, b);
    return brute_one_sided(a, b) + brute_one_sided(b, a);
}

double chamfer_accelerated(std::span<const Vec3> a, std::span<const Vec3> b) {
    require_nonempty(a, b);
    return grid_one_sided(a, b) + grid_one_sided(b, a);
}

double chamfer(std::span<const Vec3> a, std::span<const Vec3> b) {
    require_nonempty(a, b);
    if (static_cast<double>(a.size()) * static_cast<double>(b.size()) <= 1e6)
        return chamfer_bruteforce(a, b);
    return chamfer_accelerated(a, b);
}

double mask_iou(const Mask& a, const Mask& b) {
    if (a.width() != b.width() || a.height() != b.height())
        throw InputError("mask_iou: mask dimensions differ");
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.bits().size(); ++i) {
        inter += (a.bits()[i] && b.bits()[i]) ? 1 : 0;
        uni += (a.bits()[i] || b.bits()[i]) ? 1 : 0;
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

} // namespace mvr
