// Copyright Contributors to the mvrecon Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "mvrecon/geom.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace mvr {

using Face = std::array<std::uint32_t, 3>;

/// Indexed triangle mesh. Faces are wound counter-clockwise seen from outside.
struct TriMesh {
    std::vector<Vec3> vertices;
    std::vector<Face> faces;

    bool empty() const { return faces.empty(); }
    Vec3 face_normal(std::size_t f) const;  // unit length, zero for degenerate faces
    double face_area(std::size_t f) const;
    double surface_area() const;
    /// Signed enclosed volume; positive for a closed, outward-oriented mesh.
    double signed_volume() const;
};

struct TopologyReport {
    std::size_t n_vertices = 0; // referenced by at least one face
    std::size_t n_edges = 0;
    std::size_t n_faces = 0;
    std::size_t boundary_edges = 0;     // used by one face
    std::size_t nonmanifold_edges = 0;  // used by three or more faces
    std::size_t misoriented_edges = 0;  // two faces traverse the edge in the same direction
    long euler_characteristic() const {
        return static_cast<long>(n_vertices) - static_cast<long>(n_edges) + static_cast<long>(n_faces);
    }
    bool watertight() const { return boundary_edges == 0 && nonmanifold_edges == 0; }
};

TopologyReport analyze_topology(const TriMesh& mesh);

/// Number of connected components (by shared vertices).
std::size_t connected_components(const TriMesh& mesh);

/// Checks face indices, throws InputError if any is out of range.
void validate_indices(const TriMesh& mesh);

} // namespace mvr
