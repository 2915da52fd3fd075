// Copyright Contributors to the mvrecon Project
// SPDX-License-Identifier: Apache-2.0
//
#include "mvrecon/nn.hpp"

#include "mvrecon/error.hpp"
#include "mvrecon/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mvr {

PointGrid::PointGrid(std::span<const Vec3> points) : points_(points) {
    if (points.empty())
        throw InputError("point grid: no points");
    Vec3 lo = points[0], hi = points[0];
    for (const Vec3& p : points) {
        if (!p.allFinite())
            throw InputError("point grid: non-finite point");
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const Vec3 ext = (hi - lo).cwiseMax(Vec3::Constant(1e-9));
    // About two points per cell on a volume-filling set; flat sets get finer cells via the cap below.
    cell_ = std::cbrt(ext.prod() * 2.0 / static_cast<double>(points.size()));
    cell_ = std::max(cell_, ext.maxCoeff() / 256.0);
    origin_ = lo;
    for (int a = 0; a < 3; ++a)
        dims_[a] = std::clamp(static_cast<int>(ext[a] / cell_) + 1, 1, 257);

    const std::size_t n_cells = static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2];
    std::vector<std::uint32_t> cell_of(points.size());
    cell_start_.assign(n_cells + 1, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        std::array<int, 3> c{};
        for (int a = 0; a < 3; ++a)
            c[a] = std::clamp(static_cast<int>((points[i][a] - origin_[a]) / cell_), 0, dims_[a] - 1);
        cell_of[i] = static_cast<std::uint32_t>((static_cast<std::size_t>(c[2]) * dims_[1] + c[1]) * dims_[0] + c[0]);
        ++cell_start_[cell_of[i] + 1];
    }
    for (std::size_t c = 0; c < n_cells; ++c)
        cell_start_[c + 1] += cell_start_[c];
    order_.resize(points.size());
    std::vector<std::uint32_t> fill(cell_start_.begin(), cell_start_.end() - 1);
    for (std::size_t i = 0; i < points.size(); ++i)
        order_[fill[cell_of[i]]++] = static_cast<std::uint32_t>(i);
}

PointGrid::Hit PointGrid::nearest(const Vec3& q, std::size_t skip) const {
    std::array<long, 3> qc{};
    long r_start = 0;
    long r_max = 0;
    for (int a = 0; a < 3; ++a) {
        qc[a] = static_cast<long>(std::floor((q[a] - origin_[a]) / cell_));
        const long outside = qc[a] < 0 ? -qc[a] : std::max(0L, qc[a] - (dims_[a] - 1));
        r_start = std::max(r_start, outside);
        r_max = std::max({r_max, std::abs(qc[a]), std::abs(qc[a] - (dims_[a] - 1))});
    }

    Hit best{static_cast<std::size_t>(-1), std::numeric_limits<double>::infinity()};
    auto scan_cell = [&](long x, long y, long z) {
        if (x < 0 || y < 0 || z < 0 || x >= dims_[0] || y >= dims_[1] || z >= dims_[2])
            return;
        const std::size_t c = (static_cast<std::size_t>(z) * dims_[1] + y) * dims_[0] + x;
        for (std::uint32_t s = cell_start_[c]; s < cell_start_[c + 1]; ++s) {
            const std::size_t idx = order_[s];
            if (idx == skip)
                continue;
            const double d = (points_[idx] - q).squaredNorm();
            if (d < best.squared_distance || (d == best.squared_distance && idx < best.index))
                best = {idx, d};
        }
    };

    // Ring r is the shell of cells at Chebyshev distance r from qc, clipped to the grid.
    auto lo = [&](int a, long r) { return std::max(-r, -qc[a]); };
    auto hi = [&](int a, long r) { return std::min(r, dims_[a] - 1 - qc[a]); };
    for (long r = r_start; r <= r_max; ++r) {
        for (long dz = lo(2, r); dz <= hi(2, r); ++dz)
            for (long dy = lo(1, r); dy <= hi(1, r); ++dy) {
                const bool face = std::abs(dz) == r || std::abs(dy) == r;
                if (face) {
                    for (long dx = lo(0, r); dx <= hi(0, r); ++dx)
                        scan_cell(qc[0] + dx, qc[1] + dy, qc[2] + dz);
                } else {
                    scan_cell(qc[0] - r, qc[1] + dy, qc[2] + dz);
                    if (r > 0)
                        scan_cell(qc[0] + r, qc[1] + dy, qc[2] + dz);
                }
            }
        // Anything in ring r+1 or beyond is at least r cells away.
        const double bound = static_cast<double>(r) * cell_;
        if (best.squared_distance <= bound * bound)
            break;
    }
    return best;
}

double mean_nearest_neighbor_distance(std::span<const Vec3> points) {
    if (points.size() < 2)
        return 0.0;
    const PointGrid index(points);
    std::vector<double> d(points.size());
    parallel_for(0, points.size(), 4096, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i)
            d[i] = std::sqrt(index.nearest(points[i], i).squared_distance);
    });
    double sum = 0.0;
    for (double v : d)
        sum += v;
    return sum / static_cast<double>(points.size());
}

} // namespace mvr
