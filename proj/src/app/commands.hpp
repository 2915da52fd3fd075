// Copyright Contributors to the mvrecon Project
// SPDX-License-Identifier: Apache-2.0
//
// Pipeline stages as functions over on-disk artifacts, plus the argument-parsing
// front end shared by the `mvrecon` tool and the tests.
//
// Output layout of each stage:
//   synth        <out>/images/NNN.png, <out>/masks/NNN.png, <out>/cameras.json
//   carve        <out>/init.ply (N_init points), <out>/grid.bin, <out>/grid.json
//   reconstruct  <out>/gaussians.ply, <out>/loss.csv, <out>/renders/NNN.png
//   mesh         <out>/mesh.obj, <out>/refine.csv
//   eval         one metrics JSON file
//   pipeline     <out>/{dataset,heldout,carve,recon,mesh,eval}
#pragma once

#include "config.hpp"

#include "mvrecon/eval.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mvr::app {

namespace fs = std::filesystem;

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumerical = 3;

/// An empty scene path selects the built-in checkerboard sphere.
void cmd_synth(const fs::path& scene_file, const RunConfig& cfg, const fs::path& out, std::ostream& log);

void cmd_carve(const fs::path& dataset, const RunConfig& cfg, const fs::path& out, std::ostream& log);

void cmd_reconstruct(const fs::path& dataset, const fs::path& init_ply, const RunConfig& cfg, const fs::path& out,
                     std::ostream& log);

void cmd_mesh(const fs::path& grid_stem, const fs::path& dataset, const RunConfig& cfg, const fs::path& out,
              std::ostream& log);

struct EvalInputs {
    /// Directory of NNN.png renders and the reference (a dataset directory or a plain
    /// directory of PNGs). Frames are matched by file name.
    std::optional<fs::path> rendered, reference;
    /// Point or Gaussian PLY and the reference PLY; n_points is the size of `points`.
    std::optional<fs::path> points, reference_points;
};

MetricReport cmd_eval(const EvalInputs& in, const fs::path& out_json, std::ostream& log);

/// synth -> carve -> reconstruct -> mesh -> eval.
void cmd_pipeline(const fs::path& scene_file, const RunConfig& cfg, const fs::path& out, std::ostream& log);

/// Parses `args` (without the program name), runs the command and maps failures to
/// exit codes. Errors are reported on `err` as a single line starting with "error:".
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace mvr::app
