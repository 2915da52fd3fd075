// Copyright Contributors to the mvrecon Project
// SPDX-License-Identifier: Apache-2.0
//
#include "mc_tables.hpp"
#include "mvrecon/error.hpp"
#include "mvrecon/grid.hpp"

#include <array>
#include <unordered_map>

namespace mvr {

namespace {

//      v7------e6------v6
//     / |              /|
//   e11 |            e10|
//   /   e7           /  |
//  /    |           /   e5
//  v3------e2-------v2  |
//  |    |           |   |
//  |   v4------e4---|---v5
//  e3  /           e1   /
//  |  e8            |  e9
//  | /              | /    y z
//  |/               |/     |/
//  v0------e0-------v1     O--x
constexpr std::array<std::array<int, 3>, 8> kCorner = {{
    {0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}, {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1},
}};
constexpr std::array<std::array<int, 2>, 12> kEdge = {{
    {0, 1}, {1, 2}, {3, 2}, {0, 3}, {4, 5}, {5, 6}, {7, 6}, {4, 7}, {0, 4}, {1, 5}, {2, 6}, {3, 7},
}};

} // namespace

std::vector<float> occupancy_field(const VoxelGrid& grid, bool box_filter) {
    const int r = grid.resolution();
    std::vector<float> raw(grid.cell_count());
    for (std::size_t idx = 0; idx < raw.size(); ++idx)
        raw[idx] = grid.occupied(idx) ? 1.0f : 0.0f;

    if (box_filter) {
        // Separable 3-tap sums along x, y, z; cells outside the grid contribute 0.
        std::vector<float> tmp(raw.size());
        auto pass = [&](const std::vector<float>& src, std::vector<float>& dst, int axis) {
            const std::size_t stride = axis == 0 ? 1 : axis == 1 ? r : static_cast<std::size_t>(r) * r;
            for (int k = 0; k < r; ++k)
                for (int j = 0; j < r; ++j)
                    for (int i = 0; i < r; ++i) {
                        const std::size_t idx = grid.linear_index(i, j, k);
                        const int coord = axis == 0 ? i : axis == 1 ? j : k;
                        float s = src[idx];
                        if (coord > 0)
                            s += src[idx - stride];
                        if (coord + 1 < r)
                            s += src[idx + stride];
                        dst[idx] = s;
                    }
        };
        pass(raw, tmp, 0);
        pass(tmp, raw, 1);
        pass(raw, tmp, 2);
        for (std::size_t idx = 0; idx < raw.size(); ++idx)
            raw[idx] = tmp[idx] / 27.0f;
    }

    const int n = r + 2;
    std::vector<float> field(static_cast<std::size_t>(n) * n * n, 0.0f);
    for (int k = 0; k < r; ++k)
        for (int j = 0; j < r; ++j)
            for (int i = 0; i < r; ++i)
                field[(static_cast<std::size_t>(k + 1) * n + (j + 1)) * n + (i + 1)] = raw[grid.linear_index(i, j, k)];
    return field;
}

TriMesh marching_cubes(const VoxelGrid& grid, const MarchingCubesOptions& opts) {
    if (grid.occupied_count() == 0)
        throw InputError("marching_cubes: grid has no occupied cell");

    const std::vector<float> field = occupancy_field(grid, opts.box_filter);
    const int n = grid.resolution() + 2;
    const Vec3 h = grid.voxel_size();
    const Vec3 origin = grid.bounds().min - 0.5 * h; // position of lattice point (0,0,0)
    const float iso = static_cast<float>(opts.iso);
    auto lattice = [n](int i, int j, int k) { return (static_cast<std::size_t>(k) * n + j) * n + i; };

    TriMesh mesh;
    std::unordered_map<std::uint64_t, std::uint32_t> edge_vertex;
    edge_vertex.reserve(grid.occupied_count() * 2 + 64);

    std::array<float, 8> value{};
    std::array<std::uint32_t, 12> vid{};
    for (int k = 0; k + 1 < n; ++k)
        for (int j = 0; j + 1 < n; ++j)
            for (int i = 0; i + 1 < n; ++i) {
                int cube = 0;
                for (int c = 0; c < 8; ++c) {
                    value[c] = field[lattice(i + kCorner[c][0], j + kCorner[c][1], k + kCorner[c][2])];
                    if (value[c] < iso)
                        cube |= 1 << c;
                }
                if (cube == 0 || cube == 255)
                    continue;

                const auto& row = detail::kTriTable[cube];
                for (int t = 0; row[t] != -1; ++t) {
                    const int e = row[t];
                    const int a = kEdge[e][0];
                    const int b = kEdge[e][1];
                    const std::array<int, 3>& ca = kCorner[a];
                    const std::array<int, 3>& cb = kCorner[b];
                    const int axis = ca[0] != cb[0] ? 0 : ca[1] != cb[1] ? 1 : 2;
                    // Both edge endpoints differ only along `axis`; key on the lower one.
                    const int li = i + std::min(ca[0], cb[0]);
                    const int lj = j + std::min(ca[1], cb[1]);
                    const int lk = k + std::min(ca[2], cb[2]);
                    const std::uint64_t key = lattice(li, lj, lk) * 3 + axis;
                    auto [it, inserted] = edge_vertex.try_emplace(key, static_cast<std::uint32_t>(mesh.vertices.size()));
                    if (inserted) {
                        const double s = (iso - value[a]) / static_cast<double>(value[b] - value[a]);
                        const Vec3 pa = origin + Vec3(i + ca[0], j + ca[1], k + ca[2]).cwiseProduct(h);
                        const Vec3 pb = origin + Vec3(i + cb[0], j + cb[1], k + cb[2]).cwiseProduct(h);
                        mesh.vertices.push_back(pa + s * (pb - pa));
                    }
                    vid[t % 3] = it->second;
                    if (t % 3 == 2)
                        mesh.faces.push_back({vid[0], vid[1], vid[2]});
                }
            }
    return mesh;
}

} // namespace mvr
