// Copyright Contributors to the mvrecon Project
// SPDX-License-Identifier: Apache-2.0
//
#include "mvrecon/trimesh.hpp"

#include "mvrecon/error.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

namespace mvr {

Vec3 TriMesh::face_normal(std::size_t f) const {
    const Face& t = faces[f];
    const Vec3 n = (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]);
    const double len = n.norm();
    return len > 0.0 ? Vec3(n / len) : Vec3::Zero();
}

double TriMesh::face_area(std::size_t f) const {
    const Face& t = faces[f];
    return 0.5 * (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]).norm();
}

double TriMesh::surface_area() const {
    double a = 0.0;
    for (std::size_t f = 0; f < faces.size(); ++f)
        a += face_area(f);
    return a;
}

double TriMesh::signed_volume() const {
    double v = 0.0;
    for (const Face& t : faces)
        v += vertices[t[0]].dot(vertices[t[1]].cross(vertices[t[2]]));
    return v / 6.0;
}

TopologyReport analyze_topology(const TriMesh& mesh) {
    validate_indices(mesh);
    struct EdgeUse {
        int count = 0;
        int forward = 0; // traversals from lower to higher index
    };
    std::unordered_map<std::uint64_t, EdgeUse> edges;
    edges.reserve(mesh.faces.size() * 2);
    std::vector<std::uint8_t> used(mesh.vertices.size(), 0);
    for (const Face& t : mesh.faces) {
        for (int k = 0; k < 3; ++k) {
            const std::uint32_t a = t[k];
            const std::uint32_t b = t[(k + 1) % 3];
            used[a] = 1;
            const std::uint64_t key = (std::uint64_t{std::min(a, b)} << 32) | std::max(a, b);
            EdgeUse& e = edges[key];
            ++e.count;
            if (a < b)
                ++e.forward;
        }
    }
    TopologyReport r;
    r.n_faces = mesh.faces.size();
    r.n_edges = edges.size();
    r.n_vertices = static_cast<std::size_t>(std::count(used.begin(), used.end(), std::uint8_t{1}));
    for (const auto& [key, e] : edges) {
        if (e.count == 1)
            ++r.boundary_edges;
        else if (e.count > 2)
            ++r.nonmanifold_edges;
        else if (e.forward != 1)
            ++r.misoriented_edges;
    }
    return r;
}

std::size_t connected_components(const TriMesh& mesh) {
    std::vector<std::uint32_t> parent(mesh.vertices.size());
    std::iota(parent.begin(), parent.end(), 0u);
    auto find = [&](std::uint32_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    std::vector<std::uint8_t> used(mesh.vertices.size(), 0);
    for (const Face& t : mesh.faces) {
        for (int k = 0; k < 3; ++k)
            used[t[k]] = 1;
        parent[find(t[1])] = find(t[0]);
        parent[find(t[2])] = find(t[0]);
    }
    std::size_t n = 0;
    for (std::uint32_t v = 0; v < parent.size(); ++v)
        if (used[v] && find(v) == v)
            ++n;
    return n;
}

void validate_indices(const TriMesh& mesh) {
    for (const Face& t : mesh.faces)
        for (std::uint32_t i : t)
            if (i >= mesh.vertices.size())
                throw InputError("mesh: face index out of range");
}

} // namespace mvr
