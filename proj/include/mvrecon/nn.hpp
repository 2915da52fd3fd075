// Copyright Contributors to the mvrecon Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "mvrecon/geom.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace mvr {

/// Uniform-grid index for exact nearest-neighbour queries in 3D.
class PointGrid {
  public:
    explicit PointGrid(std::span<const Vec3> points);

    struct Hit {
        std::size_t index;
        double squared_distance;
    };

    /// Exact nearest point to `q`. `skip` excludes one index (for self-queries).
    Hit nearest(const Vec3& q, std::size_t skip = static_cast<std::size_t>(-1)) const;

  private:
    std::span<const Vec3> points_;
    Vec3 origin_;
    double cell_;
    std::array<int, 3> dims_;
    std::vector<std::uint32_t> cell_start_; // size = cells + 1
    std::vector<std::uint32_t> order_;      // point indices grouped by cell
};

/// Mean distance from each point to its nearest other point. Zero for fewer than two points.
double mean_nearest_neighbor_distance(std::span<const Vec3> points);

} // namespace mvr
