// Copyright Contributors to the mvrecon Project
// SPDX-License-Identifier: Apache-2.0
//
// On-disk formats. All readers throw InputError on missing or malformed files.
//
//   cameras.json   {"cameras": [{width, height, fx, fy, cx, cy, world_from_camera}]}
//                  world_from_camera is a 4x4 row-major array of 16 numbers.
//   point PLY      binary_little_endian, float x y z [nx ny nz]
//   Gaussian PLY   binary_little_endian, float x y z scale_0..2 (log) rot_0..3 (w x y z)
//                  opacity (logit) red green blue (linear, [0,1])
//   mesh OBJ       "v x y z r g b" and 1-based "f a b c"
//   grid files     <stem>.bin raw occupancy bits + <stem>.json {resolution, aabb}
//   dataset dir    images/NNN.png, masks/NNN.png, cameras.json
#pragma once

#include "mvrecon/eval.hpp"
#include "mvrecon/geom.hpp"
#include "mvrecon/grid.hpp"
#include "mvrecon/image.hpp"
#include "mvrecon/mesh.hpp"
#include "mvrecon/optim.hpp"
#include "mvrecon/splat.hpp"
#include "mvrecon/views.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace mvr::io {

namespace fs = std::filesystem;

/// 8-bit PNG; RGB images are written as RGB, single-channel images as grayscale.
void write_png(const fs::path& path, const Image& img);
/// Values mapped to [0,1]; keeps the file's channel count (1-4).
Image read_png(const fs::path& path);
void write_mask_png(const fs::path& path, const Mask& mask);
/// Uses the alpha channel when present, otherwise the first channel; threshold 0.5.
Mask read_mask_png(const fs::path& path);
/// Drops an alpha channel and expands grayscale to RGB.
Image to_rgb(const Image& img);
/// Rounds to the 8-bit grid the PNG writer uses.
Image quantize8(const Image& img);

void write_cameras(const fs::path& path, std::span<const Camera> cameras);
std::vector<Camera> read_cameras(const fs::path& path);

void write_point_ply(const fs::path& path, const PointSet& points);
PointSet read_point_ply(const fs::path& path);

void write_gaussian_ply(const fs::path& path, const GaussianSet& gs);
GaussianSet read_gaussian_ply(const fs::path& path);

void write_obj(const fs::path& path, const TexturedMesh& tm);
TexturedMesh read_obj(const fs::path& path);
void write_mesh_ply(const fs::path& path, const TexturedMesh& tm);

/// Writes <stem>.bin and <stem>.json next to each other.
void write_grid(const fs::path& stem, const VoxelGrid& grid);
VoxelGrid read_grid(const fs::path& stem);

void write_trace_csv(const fs::path& path, const std::vector<LossRecord>& trace);
std::vector<LossRecord> read_trace_csv(const fs::path& path);

void write_metrics_json(const fs::path& path, const MetricReport& report);
MetricReport read_metrics_json(const fs::path& path);

void write_dataset(const fs::path& dir, const ViewSet& views);
ViewSet read_dataset(const fs::path& dir);

/// Name of the k-th frame file, e.g. "007.png".
std::string frame_name(std::size_t k);

} // namespace mvr::io
