// Copyright Contributors to the mvrecon Project
// SPDX-License-Identifier: Apache-2.0
//
#include "commands.hpp"

#include "mvrecon/error.hpp"
#include "mvrecon/eval.hpp"
#include "mvrecon/io.hpp"
#include "mvrecon/parallel.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <numbers>
#include <ostream>
#include <random>

namespace mvr::app {

namespace {

/// Prefixes errors raised inside a stage with the stage name.
template <typename Fn>
auto staged(const char* stage, Fn&& fn) {
    try {
        return fn();
    } catch (const InputError& e) {
        throw InputError(std::string(stage) + ": " + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError(std::string(stage) + ": " + e.what());
    } catch (const fs::filesystem_error& e) {
        throw InputError(std::string(stage) + ": " + e.what());
    }
}

void make_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw InputError("cannot create directory " + dir.string() + (ec ? ": " + ec.message() : ""));
}

SdfScene scene_or_default(const fs::path& scene_file) {
    return scene_file.empty() ? checker_sphere_scene() : load_scene(scene_file);
}

std::vector<Camera> heldout_cameras(const RunConfig& cfg) {
    std::vector<Camera> cams;
    for (double deg : cfg.eval.heldout_azimuths_deg)
        cams.push_back(orbit_camera(cfg.orbit, deg * std::numbers::pi / 180.0));
    return cams;
}

void render_gaussians(const GaussianSet& gs, std::span<const Camera> cams, const Rgb& background,
                      const RasterSettings& raster, const fs::path& dir) {
    make_dir(dir);
    for (std::size_t k = 0; k < cams.size(); ++k)
        io::write_png(dir / io::frame_name(k), rasterize(gs, cams[k], background, raster).color);
}

std::vector<fs::path> png_frames(const fs::path& dir) {
    std::vector<fs::path> files;
    if (!fs::is_directory(dir))
        throw InputError("not a directory: " + dir.string());
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".png")
            files.push_back(e.path().filename());
    std::sort(files.begin(), files.end());
    if (files.empty())
        throw InputError("no PNG frames in " + dir.string());
    return files;
}

fs::path image_dir(const fs::path& dir) { return fs::is_directory(dir / "images") ? dir / "images" : dir; }

} // namespace

void cmd_synth(const fs::path& scene_file, const RunConfig& cfg, const fs::path& out, std::ostream& log) {
    staged("synth", [&] {
        cfg.validate();
        const SdfScene scene = scene_or_default(scene_file);
        const ViewSet views = make_dataset(scene, cfg.orbit, cfg.synth);
        make_dir(out);
        io::write_dataset(out, views);
        log << "synth: wrote " << views.size() << " views to " << out.string() << "\n";
    });
}

void cmd_carve(const fs::path& dataset, const RunConfig& cfg, const fs::path& out, std::ostream& log) {
    staged("carve", [&] {
        cfg.validate();
        const ViewSet views = io::read_dataset(dataset);
        std::vector<Camera> cams;
        std::vector<Mask> masks;
        for (std::size_t k = 0; k < views.size(); ++k) {
            if (views[k].mask.count() == 0)
                throw InputError("empty hull: view " + std::to_string(k) + " (masks/" + io::frame_name(k) +
                                 ") is all background");
            cams.push_back(views[k].camera);
            masks.push_back(views[k].mask);
        }
        const VoxelGrid grid = carve(cams, masks, cfg.carve.resolution);
        if (grid.occupied_count() == 0)
            throw InputError("empty hull: the silhouettes of the " + std::to_string(views.size()) +
                             " views have no common voxel");
        const TriMesh hull = marching_cubes(grid);
        if (hull.empty())
            throw InputError("empty hull: marching cubes produced no surface");
        std::mt19937_64 rng(cfg.carve.seed);
        const PointSet init = sample_surface(hull, cfg.carve.n_init, rng);
        make_dir(out);
        io::write_point_ply(out / "init.ply", init);
        io::write_grid(out / "grid", grid);
        log << "carve: " << grid.occupied_count() << " voxels, " << init.size() << " points\n";
    });
}

void cmd_reconstruct(const fs::path& dataset, const fs::path& init_ply, const RunConfig& cfg, const fs::path& out,
                     std::ostream& log) {
    staged("reconstruct", [&] {
        cfg.validate();
        const ViewSet views = io::read_dataset(dataset);
        const PointSet init = io::read_point_ply(init_ply);
        const StructuralProxy perceptual;
        const int every = std::max(1, cfg.recon.iterations / 8);
        const ReconResult r =
            reconstruct(views, init, cfg.recon, &perceptual, [&](const LossRecord& rec, std::size_t n) {
                if ((rec.iteration + 1) % every == 0)
                    log << "reconstruct: iteration " << rec.iteration + 1 << " loss " << rec.total << " gaussians "
                        << n << "\n";
            });
        make_dir(out);
        io::write_gaussian_ply(out / "gaussians.ply", r.gaussians);
        io::write_trace_csv(out / "loss.csv", r.trace);
        std::vector<Camera> cams;
        for (const View& v : views)
            cams.push_back(v.camera);
        render_gaussians(r.gaussians, cams, cfg.recon.background, cfg.recon.raster, out / "renders");
        log << "reconstruct: " << r.gaussians.count() << " gaussians written to " << out.string() << "\n";
    });
}

void cmd_mesh(const fs::path& grid_stem, const fs::path& dataset, const RunConfig& cfg, const fs::path& out,
              std::ostream& log) {
    staged("mesh", [&] {
        cfg.validate();
        const VoxelGrid grid = io::read_grid(grid_stem);
        const ViewSet views = io::read_dataset(dataset);
        TexturedMesh tm;
        tm.mesh = extract_mesh(grid, cfg.mesh.smooth_iters);
        tm.vertex_colors.assign(tm.mesh.vertices.size(), Rgb::Constant(0.5));
        const StructuralProxy perceptual;
        const RefineResult r = refine_texture(tm, views, cfg.mesh.refine, &perceptual);
        make_dir(out);
        io::write_obj(out / "mesh.obj", r.mesh);
        io::write_trace_csv(out / "refine.csv", r.trace);
        log << "mesh: " << r.mesh.mesh.vertices.size() << " vertices, " << r.mesh.mesh.faces.size() << " faces\n";
    });
}

MetricReport cmd_eval(const EvalInputs& in, const fs::path& out_json, std::ostream& log) {
    return staged("eval", [&] {
        if (in.rendered.has_value() != in.reference.has_value())
            throw InputError("rendered and reference directories must be given together");
        if (in.points.has_value() != in.reference_points.has_value())
            throw InputError("point and reference PLY files must be given together");
        if (!in.rendered && !in.points)
            throw InputError("nothing to evaluate: give image directories and/or PLY files");
        MetricReport report;
        if (in.rendered) {
            const fs::path ref_dir = image_dir(*in.reference);
            const fs::path ren_dir = image_dir(*in.rendered);
            const std::vector<fs::path> frames = png_frames(ref_dir);
            const StructuralProxy perceptual;
            double p = 0.0, s = 0.0, l = 0.0;
            for (const fs::path& f : frames) {
                if (!fs::exists(ren_dir / f))
                    throw InputError("rendered frame missing: " + (ren_dir / f).string());
                const Image a = io::to_rgb(io::read_png(ren_dir / f));
                const Image b = io::to_rgb(io::read_png(ref_dir / f));
                require_same_shape(a, b, "eval");
                p += psnr(a, b);
                s += ssim_metric(a, b);
                l += perceptual.evaluate(a, b).value;
            }
            const double n = static_cast<double>(frames.size());
            report.psnr = p / n;
            report.ssim = s / n;
            report.perceptual = l / n;
        }
        if (in.points) {
            const PointSet a = io::read_point_ply(*in.points);
            const PointSet b = io::read_point_ply(*in.reference_points);
            report.chamfer = chamfer(a.points, b.points);
            report.n_points = a.size();
        }
        if (!out_json.parent_path().empty())
            make_dir(out_json.parent_path());
        io::write_metrics_json(out_json, report);
        log << "eval: wrote " << out_json.string() << "\n";
        return report;
    });
}

void cmd_pipeline(const fs::path& scene_file, const RunConfig& cfg, const fs::path& out, std::ostream& log) {
    cfg.validate();
    const SdfScene scene = staged("pipeline", [&] { return scene_or_default(scene_file); });
    make_dir(out);
    cmd_synth(scene_file, cfg, out / "dataset", log);
    staged("synth", [&] {
        ViewSet held;
        const std::vector<Camera> cams = heldout_cameras(cfg);
        for (std::size_t k = 0; k < cams.size(); ++k)
            held.push_back(render_view(scene, cams[k], cfg.synth, cfg.orbit.n_views + k));
        io::write_dataset(out / "heldout", held);
    });
    cmd_carve(out / "dataset", cfg, out / "carve", log);
    cmd_reconstruct(out / "dataset", out / "carve" / "init.ply", cfg, out / "recon", log);
    cmd_mesh(out / "carve" / "grid", out / "dataset", cfg, out / "mesh", log);
    staged("eval", [&] {
        const GaussianSet gs = io::read_gaussian_ply(out / "recon" / "gaussians.ply");
        render_gaussians(gs, heldout_cameras(cfg), cfg.recon.background, cfg.recon.raster, out / "eval" / "renders");
        std::mt19937_64 rng(cfg.eval.seed);
        io::write_point_ply(out / "eval" / "gt_surface.ply", sample_scene_surface(scene, cfg.eval.surface_samples, rng));
    });
    EvalInputs in;
    in.rendered = out / "eval" / "renders";
    in.reference = out / "heldout";
    in.points = out / "recon" / "gaussians.ply";
    in.reference_points = out / "eval" / "gt_surface.ply";
    cmd_eval(in, out / "eval" / "metrics.json", log);
}

namespace {

struct Overrides {
    std::optional<int> views, resolution, iterations, smooth_iters, steps, carve_resolution;
    std::optional<std::size_t> n_init;
    std::optional<double> distance, elevation_deg, fov_deg, lambda_s, lambda_l;
    std::optional<std::uint64_t> seed;
    bool perturb = false;

    void apply(RunConfig& cfg) const {
        if (seed)
            cfg.set_seed(*seed);
        if (views)
            cfg.orbit.n_views = *views;
        if (resolution)
            cfg.orbit.resolution = *resolution;
        if (distance)
            cfg.orbit.distance = *distance;
        if (elevation_deg)
            cfg.orbit.elevation = *elevation_deg * std::numbers::pi / 180.0;
        if (fov_deg)
            cfg.orbit.fov_y = *fov_deg * std::numbers::pi / 180.0;
        if (perturb)
            cfg.synth.perturb = true;
        if (carve_resolution)
            cfg.carve.resolution = *carve_resolution;
        if (n_init)
            cfg.carve.n_init = *n_init;
        if (iterations)
            cfg.recon.iterations = *iterations;
        if (lambda_s)
            cfg.recon.weights.lambda_s = cfg.mesh.refine.weights.lambda_s = *lambda_s;
        if (lambda_l)
            cfg.recon.weights.lambda_l = cfg.mesh.refine.weights.lambda_l = *lambda_l;
        if (smooth_iters)
            cfg.mesh.smooth_iters = *smooth_iters;
        if (steps)
            cfg.mesh.refine.steps = *steps;
    }
};

void add_orbit_flags(CLI::App* c, Overrides& o) {
    c->add_option("--views", o.views, "Number of orbit views");
    c->add_option("--resolution", o.resolution, "Image width and height in pixels");
    c->add_option("--distance", o.distance, "Camera distance from the origin");
    c->add_option("--elevation-deg", o.elevation_deg, "Orbit elevation in degrees");
    c->add_option("--fov-deg", o.fov_deg, "Vertical field of view in degrees");
}

void add_weight_flags(CLI::App* c, Overrides& o) {
    c->add_option("--lambda-s", o.lambda_s, "D-SSIM weight");
    c->add_option("--lambda-l", o.lambda_l, "Perceptual weight");
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multi-view reconstruction: carving, Gaussian splatting, mesh texturing, metrics", "mvrecon"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "Worker threads (default: all cores)")->check(CLI::NonNegativeNumber);

    fs::path config, scene, outp, data, init, grid, rendered, reference, points, ref_points;
    Overrides o;
    auto add_config = [&](CLI::App* c) {
        c->add_option("--config", config, "JSON run configuration")->check(CLI::ExistingFile);
    };

    CLI::App* synth = app.add_subcommand("synth", "Render an analytic scene into a posed-view dataset");
    synth->add_option("--scene", scene, "Scene JSON (default: checkerboard sphere)")->check(CLI::ExistingFile);
    synth->add_option("--out", outp, "Output dataset directory")->required();
    synth->add_option("--seed", o.seed, "Seed for view perturbation");
    synth->add_flag("--perturb", o.perturb, "Per-view color jitter and silhouette erosion");
    add_orbit_flags(synth, o);
    add_config(synth);

    CLI::App* carve_cmd = app.add_subcommand("carve", "Carve the visual hull and sample initialization points");
    carve_cmd->add_option("--data", data, "Dataset directory")->required();
    carve_cmd->add_option("--out", outp, "Output directory")->required();
    carve_cmd->add_option("--resolution", o.carve_resolution, "Voxel grid resolution");
    carve_cmd->add_option("--n-init", o.n_init, "Number of surface samples");
    carve_cmd->add_option("--seed", o.seed, "Seed for surface sampling");
    add_config(carve_cmd);

    CLI::App* recon = app.add_subcommand("reconstruct", "Optimize Gaussians against the dataset views");
    recon->add_option("--data", data, "Dataset directory")->required();
    recon->add_option("--init", init, "Initialization point PLY")->required()->check(CLI::ExistingFile);
    recon->add_option("--out", outp, "Output directory")->required();
    recon->add_option("--iterations", o.iterations, "Optimization iterations");
    add_weight_flags(recon, o);
    add_config(recon);

    CLI::App* mesh = app.add_subcommand("mesh", "Extract the hull mesh and refine its vertex colors");
    mesh->add_option("--grid", grid, "Grid file stem (<stem>.bin and <stem>.json)")->required();
    mesh->add_option("--data", data, "Dataset directory")->required();
    mesh->add_option("--out", outp, "Output directory")->required();
    mesh->add_option("--smooth-iters", o.smooth_iters, "Laplacian smoothing passes");
    mesh->add_option("--steps", o.steps, "Texture refinement steps");
    add_weight_flags(mesh, o);
    add_config(mesh);

    CLI::App* eval = app.add_subcommand("eval", "Image and geometry metrics as JSON");
    eval->add_option("--rendered", rendered, "Directory of rendered frames");
    eval->add_option("--reference", reference, "Reference dataset or frame directory");
    eval->add_option("--points", points, "Point or Gaussian PLY")->check(CLI::ExistingFile);
    eval->add_option("--reference-points", ref_points, "Reference point PLY")->check(CLI::ExistingFile);
    eval->add_option("--out", outp, "Output metrics JSON")->required();

    CLI::App* pipeline = app.add_subcommand("pipeline", "synth, carve, reconstruct, mesh and eval in one run");
    pipeline->add_option("--scene", scene, "Scene JSON (default: checkerboard sphere)")->check(CLI::ExistingFile);
    pipeline->add_option("--out", outp, "Output directory")->required();
    pipeline->add_option("--seed", o.seed, "Base seed for every stage");
    pipeline->add_option("--iterations", o.iterations, "Optimization iterations");
    pipeline->add_flag("--perturb", o.perturb, "Per-view color jitter and silhouette erosion");
    add_weight_flags(pipeline, o);
    add_config(pipeline);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    }

    try {
        if (threads > 0)
            set_thread_count(threads);
        RunConfig cfg;
        if (!config.empty())
            cfg = load_config(config);
        o.apply(cfg);

        if (synth->parsed())
            cmd_synth(scene, cfg, outp, out);
        else if (carve_cmd->parsed())
            cmd_carve(data, cfg, outp, out);
        else if (recon->parsed())
            cmd_reconstruct(data, init, cfg, outp, out);
        else if (mesh->parsed())
            cmd_mesh(grid, data, cfg, outp, out);
        else if (eval->parsed()) {
            EvalInputs in;
            if (!rendered.empty())
                in.rendered = rendered;
            if (!reference.empty())
                in.reference = reference;
            if (!points.empty())
                in.points = points;
            if (!ref_points.empty())
                in.reference_points = ref_points;
            cmd_eval(in, outp, out);
        } else if (pipeline->parsed())
            cmd_pipeline(scene, cfg, outp, out);
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const NumericalError& e) {
        err << "error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitOk;
}

} // namespace mvr::app
