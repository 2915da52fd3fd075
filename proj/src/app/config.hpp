// Copyright Contributors to the mvrecon Project
// SPDX-License-Identifier: Apache-2.0
//
// JSON run configuration. Every field is optional; missing fields keep the library
// defaults. Unknown keys are rejected so typos do not silently fall back to defaults.
//
//   {
//     "orbit":       {"n_views", "distance", "elevation_deg", "fov_deg", "resolution"},
//     "synth":       {"perturb", "jitter", "seed", "ambient", "background"},
//     "carve":       {"resolution", "n_init", "seed"},
//     "reconstruct": {"iterations", "lr": {"position", "log_scale", "rotation", "opacity", "color"},
//                     "prune_interval", "prune_threshold", "lambda_s", "lambda_l", "background"},
//     "mesh":        {"smooth_iters", "steps", "lr", "lambda_s", "lambda_l", "background"},
//     "eval":        {"heldout_azimuths_deg", "surface_samples", "seed"}
//   }
#pragma once

#include "mvrecon/geom.hpp"
#include "mvrecon/mesh.hpp"
#include "mvrecon/optim.hpp"
#include "mvrecon/synth.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace mvr::app {

struct CarveConfig {
    int resolution = 128;
    std::size_t n_init = 16384;
    std::uint64_t seed = 0;
};

struct MeshConfig {
    int smooth_iters = 5;
    RefineConfig refine;
};

struct EvalConfig {
    std::vector<double> heldout_azimuths_deg{10.0};
    std::size_t surface_samples = 20000;
    std::uint64_t seed = 0;
};

struct RunConfig {
    OrbitConfig orbit = default_orbit();
    DatasetOptions synth;
    CarveConfig carve;
    ReconConfig recon;
    MeshConfig mesh;
    EvalConfig eval;

    /// The rig used by the command-line tools: 18 views at 128 px.
    static OrbitConfig default_orbit();
    /// Copies one base seed into every stage that draws random numbers.
    void set_seed(std::uint64_t seed);
    void validate() const;
};

nlohmann::json load_json(const std::filesystem::path& path);

/// Applies the fields present in `j` on top of `cfg`.
void apply_config(const nlohmann::json& j, RunConfig& cfg);
RunConfig load_config(const std::filesystem::path& path);

/// {"primitives": [{"shape": "sphere"|"box"|"torus", "center": [x,y,z],
///   "rotation": 9 numbers row-major (optional), "size": [a,b,c],
///   "color": {"kind": "solid"|"checker", "primary": [r,g,b], "secondary": [r,g,b],
///             "n_azimuth": int, "n_polar": int}}]}
SdfScene parse_scene(const nlohmann::json& j);
SdfScene load_scene(const std::filesystem::path& path);
nlohmann::json scene_to_json(const SdfScene& scene);

} // namespace mvr::app
