// Copyright Contributors to the mvrecon Project
// SPDX-License-Identifier: Apache-2.0
//
#include "mvrecon/grid.hpp"

#include "mvrecon/error.hpp"
#include "mvrecon/parallel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

namespace mvr {

VoxelGrid::VoxelGrid(int resolution, const Aabb& bounds) : resolution_(resolution), bounds_(bounds) {
    if (resolution < 2)
        throw InputError("voxel grid: resolution must be >= 2");
    if (!bounds.min.allFinite() || !bounds.max.allFinite() || (bounds.extent().array() <= 0.0).any())
        throw InputError("voxel grid: bounds must have positive extent on every axis");
    words_.assign((cell_count() + 63) / 64, 0);
}

Vec3 VoxelGrid::cell_center(int i, int j, int k) const {
    return bounds_.min + (Vec3(i, j, k).array() + 0.5).matrix().cwiseProduct(voxel_size());
}

void VoxelGrid::set(std::size_t idx, bool v) {
    const std::uint64_t bit = std::uint64_t{1} << (idx & 63);
    if (v)
        words_[idx >> 6] |= bit;
    else
        words_[idx >> 6] &= ~bit;
}

std::size_t VoxelGrid::occupied_count() const {
    std::size_t n = 0;
    for (std::uint64_t w : words_)
        n += static_cast<std::size_t>(std::popcount(w));
    return n;
}

double VoxelGrid::occupied_volume() const { return occupied_count() * voxel_size().prod(); }

bool VoxelGrid::operator==(const VoxelGrid& o) const {
    return resolution_ == o.resolution_ && bounds_.min == o.bounds_.min && bounds_.max == o.bounds_.max &&
           words_ == o.words_;
}

VoxelGrid carve(std::span<const Camera> cameras, std::span<const Mask> masks, int resolution, const Aabb& bounds) {
    if (cameras.empty())
        throw InputError("carve: at least one view is required");
    if (cameras.size() != masks.size())
        throw InputError("carve: camera and mask counts differ");
    for (std::size_t v = 0; v < cameras.size(); ++v)
        if (masks[v].width() != cameras[v].width() || masks[v].height() != cameras[v].height())
            throw InputError("carve: mask " + std::to_string(v) + " does not match its camera size");

    VoxelGrid grid(resolution, bounds);
    const int r = resolution;
    std::vector<std::uint8_t> keep(grid.cell_count(), 0);

    // One z-slab per chunk; every cell is a pure function of the views.
    parallel_for(0, r, 1, [&](std::size_t k0, std::size_t k1) {
        for (int k = static_cast<int>(k0); k < static_cast<int>(k1); ++k)
            for (int j = 0; j < r; ++j)
                for (int i = 0; i < r; ++i) {
                    const Vec3 c = grid.cell_center(i, j, k);
                    bool inside = true;
                    for (std::size_t v = 0; v < cameras.size() && inside; ++v) {
                        const auto proj = project(cameras[v], c);
                        if (!proj) {
                            inside = false;
                            break;
                        }
                        const double px = std::floor(proj->pixel.x());
                        const double py = std::floor(proj->pixel.y());
                        if (px < 0 || py < 0 || px >= masks[v].width() || py >= masks[v].height()) {
                            inside = false;
                            break;
                        }
                        inside = masks[v].at(static_cast<int>(px), static_cast<int>(py));
                    }
                    keep[grid.linear_index(i, j, k)] = inside ? 1 : 0;
                }
    });

    for (std::size_t idx = 0; idx < keep.size(); ++idx)
        if (keep[idx])
            grid.set(idx, true);
    return grid;
}

PointSet sample_surface(const TriMesh& mesh, std::size_t n, std::mt19937_64& rng) {
    PointSet out;
    if (n == 0)
        return out;
    validate_indices(mesh);
    std::vector<double> cumulative(mesh.faces.size());
    double total = 0.0;
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        total += mesh.face_area(f);
        cumulative[f] = total;
    }
    if (!(total > 0.0))
        throw InputError("sample_surface: mesh has no face with positive area");

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    out.points.reserve(n);
    out.normals.reserve(n);
    for (std::size_t s = 0; s < n; ++s) {
        const double pick = unit(rng) * total;
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
        std::size_t f = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cumulative.begin(),
                                                                          static_cast<std::ptrdiff_t>(mesh.faces.size()) - 1));
        // Zero-area faces occupy an empty interval and are never picked by upper_bound.
        const double r1 = std::sqrt(unit(rng));
        const double r2 = unit(rng);
        const Face& t = mesh.faces[f];
        const Vec3 p = (1.0 - r1) * mesh.vertices[t[0]] + r1 * (1.0 - r2) * mesh.vertices[t[1]] +
                       r1 * r2 * mesh.vertices[t[2]];
        out.points.push_back(p);
        out.normals.push_back(mesh.face_normal(f));
    }
    return out;
}

} // namespace mvr
