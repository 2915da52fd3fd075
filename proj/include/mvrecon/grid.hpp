// Copyright Contributors to the mvrecon Project
// SPDX-License-Identifier: Apache-2.0
//
// Visual-hull carving on a regular occupancy grid, isosurface extraction and
// uniform surface sampling.
#pragma once

#include "mvrecon/geom.hpp"
#include "mvrecon/image.hpp"
#include "mvrecon/trimesh.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace mvr {

struct Aabb {
    Vec3 min = Vec3::Constant(-0.5);
    Vec3 max = Vec3::Constant(0.5);

    Vec3 extent() const { return max - min; }
    bool contains(const Vec3& p, double slack = 0.0) const {
        return (p.array() >= min.array() - slack).all() && (p.array() <= max.array() + slack).all();
    }
};

/// R^3 occupancy bitfield over an axis-aligned box. Cell (i, j, k) has linear index
/// (k * R + j) * R + i and center min + (index + 0.5) * extent / R.
class VoxelGrid {
  public:
    VoxelGrid(int resolution, const Aabb& bounds);

    int resolution() const { return resolution_; }
    const Aabb& bounds() const { return bounds_; }
    std::size_t cell_count() const { return static_cast<std::size_t>(resolution_) * resolution_ * resolution_; }
    Vec3 voxel_size() const { return bounds_.extent() / resolution_; }
    Vec3 cell_center(int i, int j, int k) const;
    std::size_t linear_index(int i, int j, int k) const {
        return (static_cast<std::size_t>(k) * resolution_ + j) * resolution_ + i;
    }

    bool occupied(int i, int j, int k) const { return occupied(linear_index(i, j, k)); }
    bool occupied(std::size_t idx) const { return (words_[idx >> 6] >> (idx & 63)) & 1u; }
    void set(int i, int j, int k, bool v) { set(linear_index(i, j, k), v); }
    void set(std::size_t idx, bool v);
    std::size_t occupied_count() const;
    double occupied_volume() const;

    /// Packed bits, cell index order, little-endian within each 64-bit word.
    const std::vector<std::uint64_t>& words() const { return words_; }
    std::vector<std::uint64_t>& words() { return words_; }

    bool operator==(const VoxelGrid& o) const;

  private:
    int resolution_;
    Aabb bounds_;
    std::vector<std::uint64_t> words_;
};

struct PointSet {
    std::vector<Vec3> points;
    std::vector<Vec3> normals; // empty or one per point

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
    bool has_normals() const { return !normals.empty(); }
};

/// Intersection of silhouette cones. A cell is kept iff its center projects in front of
/// every camera, inside its image, onto a foreground pixel. Throws InputError for an
/// empty view list or masks that do not match their cameras.
VoxelGrid carve(std::span<const Camera> cameras, std::span<const Mask> masks, int resolution,
                const Aabb& bounds = {});

struct MarchingCubesOptions {
    double iso = 0.5;
    /// Apply one 3x3x3 mean filter to the binary occupancy before extraction.
    bool box_filter = true;
};

/// The scalar field marching cubes sees: occupancy in {0,1} at cell centers,
/// optionally box filtered (outside cells count as 0), then zero padded by one layer.
/// Returned with dimension R+2 per axis, index (k * (R+2) + j) * (R+2) + i.
std::vector<float> occupancy_field(const VoxelGrid& grid, bool box_filter);

/// Closed, outward-oriented isosurface of the occupancy field. Throws InputError when
/// the grid has no occupied cell.
TriMesh marching_cubes(const VoxelGrid& grid, const MarchingCubesOptions& opts = {});

/// Area-weighted uniform samples on the mesh surface with face normals. Throws
/// InputError when the mesh has no face of positive area (unless n == 0).
PointSet sample_surface(const TriMesh& mesh, std::size_t n, std::mt19937_64& rng);

} // namespace mvr
