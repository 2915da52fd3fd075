// Copyright Contributors to the mvrecon Project
// SPDX-License-Identifier: Apache-2.0
//
#include "config.hpp"

#include "mvrecon/error.hpp"

#include <fstream>
#include <initializer_list>
#include <numbers>
#include <string>

namespace mvr::app {

using nlohmann::json;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

void require_object(const json& j, const std::string& where) {
    if (!j.is_object())
        throw InputError("config: " + where + " must be a JSON object");
}

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    require_object(j, where);
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (const char* a : allowed)
            known = known || key == a;
        if (!known)
            throw InputError("config: unknown key '" + key + "' in " + where);
    }
}

double number(const json& j, const std::string& where) {
    if (!j.is_number())
        throw InputError("config: " + where + " must be a number");
    return j.get<double>();
}

long long integer(const json& j, const std::string& where) {
    if (!j.is_number_integer())
        throw InputError("config: " + where + " must be an integer");
    return j.get<long long>();
}

std::size_t count(const json& j, const std::string& where) {
    const long long v = integer(j, where);
    if (v < 0)
        throw InputError("config: " + where + " must be >= 0");
    return static_cast<std::size_t>(v);
}

bool boolean(const json& j, const std::string& where) {
    if (!j.is_boolean())
        throw InputError("config: " + where + " must be true or false");
    return j.get<bool>();
}

Vec3 vec3(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 3)
        throw InputError("config: " + where + " must be an array of 3 numbers");
    return {number(j[0], where), number(j[1], where), number(j[2], where)};
}

template <typename T, typename Get>
void opt(const json& j, const char* key, T& out, const std::string& where, Get get) {
    if (j.contains(key))
        out = static_cast<T>(get(j.at(key), where + "." + key));
}

void apply_weights(const json& j, LossWeights& w, const std::string& where) {
    opt(j, "lambda_s", w.lambda_s, where, number);
    opt(j, "lambda_l", w.lambda_l, where, number);
}

void apply_orbit(const json& j, OrbitConfig& o) {
    check_keys(j, "orbit", {"n_views", "distance", "elevation_deg", "fov_deg", "resolution"});
    opt(j, "n_views", o.n_views, "orbit", integer);
    opt(j, "distance", o.distance, "orbit", number);
    opt(j, "resolution", o.resolution, "orbit", integer);
    if (j.contains("elevation_deg"))
        o.elevation = number(j["elevation_deg"], "orbit.elevation_deg") * kDeg;
    if (j.contains("fov_deg"))
        o.fov_y = number(j["fov_deg"], "orbit.fov_deg") * kDeg;
}

void apply_synth(const json& j, DatasetOptions& s) {
    check_keys(j, "synth", {"perturb", "jitter", "seed", "ambient", "background"});
    opt(j, "perturb", s.perturb, "synth", boolean);
    opt(j, "jitter", s.jitter, "synth", number);
    opt(j, "seed", s.seed, "synth", count);
    opt(j, "ambient", s.gt.ambient, "synth", number);
    if (j.contains("background"))
        s.gt.background = vec3(j["background"], "synth.background");
}

void apply_carve(const json& j, CarveConfig& c) {
    check_keys(j, "carve", {"resolution", "n_init", "seed"});
    opt(j, "resolution", c.resolution, "carve", integer);
    opt(j, "n_init", c.n_init, "carve", count);
    opt(j, "seed", c.seed, "carve", count);
}

void apply_recon(const json& j, ReconConfig& r) {
    check_keys(j, "reconstruct",
               {"iterations", "lr", "prune_interval", "prune_threshold", "lambda_s", "lambda_l", "background"});
    opt(j, "iterations", r.iterations, "reconstruct", integer);
    opt(j, "prune_interval", r.prune_interval, "reconstruct", integer);
    opt(j, "prune_threshold", r.prune_opacity_threshold, "reconstruct", number);
    apply_weights(j, r.weights, "reconstruct");
    if (j.contains("background"))
        r.background = vec3(j["background"], "reconstruct.background");
    if (j.contains("lr")) {
        const json& lr = j["lr"];
        check_keys(lr, "reconstruct.lr", {"position", "log_scale", "rotation", "opacity", "color"});
        opt(lr, "position", r.lr.position, "reconstruct.lr", number);
        opt(lr, "log_scale", r.lr.log_scale, "reconstruct.lr", number);
        opt(lr, "rotation", r.lr.rotation, "reconstruct.lr", number);
        opt(lr, "opacity", r.lr.opacity, "reconstruct.lr", number);
        opt(lr, "color", r.lr.color, "reconstruct.lr", number);
    }
}

void apply_mesh(const json& j, MeshConfig& m) {
    check_keys(j, "mesh", {"smooth_iters", "steps", "lr", "lambda_s", "lambda_l", "background"});
    opt(j, "smooth_iters", m.smooth_iters, "mesh", integer);
    opt(j, "steps", m.refine.steps, "mesh", integer);
    opt(j, "lr", m.refine.lr, "mesh", number);
    apply_weights(j, m.refine.weights, "mesh");
    if (j.contains("background"))
        m.refine.background = vec3(j["background"], "mesh.background");
}

void apply_eval(const json& j, EvalConfig& e) {
    check_keys(j, "eval", {"heldout_azimuths_deg", "surface_samples", "seed"});
    if (j.contains("heldout_azimuths_deg")) {
        const json& a = j["heldout_azimuths_deg"];
        if (!a.is_array())
            throw InputError("config: eval.heldout_azimuths_deg must be an array of numbers");
        e.heldout_azimuths_deg.clear();
        for (const json& v : a)
            e.heldout_azimuths_deg.push_back(number(v, "eval.heldout_azimuths_deg"));
    }
    opt(j, "surface_samples", e.surface_samples, "eval", count);
    opt(j, "seed", e.seed, "eval", count);
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

} // namespace

OrbitConfig RunConfig::default_orbit() {
    OrbitConfig o;
    o.resolution = 128;
    return o;
}

void RunConfig::set_seed(std::uint64_t seed) {
    synth.seed = seed;
    carve.seed = seed;
    eval.seed = seed;
}

void RunConfig::validate() const {
    orbit.validate();
    if (carve.resolution < 1)
        throw InputError("config: carve.resolution must be >= 1");
    if (carve.n_init == 0)
        throw InputError("config: carve.n_init must be >= 1");
    if (!(synth.jitter >= 0.0 && synth.jitter < 1.0))
        throw InputError("config: synth.jitter must lie in [0, 1)");
    if (!(synth.gt.ambient >= 0.0 && synth.gt.ambient <= 1.0))
        throw InputError("config: synth.ambient must lie in [0, 1]");
    recon.validate();
    if (mesh.smooth_iters < 0)
        throw InputError("config: mesh.smooth_iters must be >= 0");
    mesh.refine.validate();
    if (eval.surface_samples == 0)
        throw InputError("config: eval.surface_samples must be >= 1");
}

json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw InputError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw InputError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

void apply_config(const json& j, RunConfig& cfg) {
    check_keys(j, "config", {"orbit", "synth", "carve", "reconstruct", "mesh", "eval"});
    if (j.contains("orbit"))
        apply_orbit(j["orbit"], cfg.orbit);
    if (j.contains("synth"))
        apply_synth(j["synth"], cfg.synth);
    if (j.contains("carve"))
        apply_carve(j["carve"], cfg.carve);
    if (j.contains("reconstruct"))
        apply_recon(j["reconstruct"], cfg.recon);
    if (j.contains("mesh"))
        apply_mesh(j["mesh"], cfg.mesh);
    if (j.contains("eval"))
        apply_eval(j["eval"], cfg.eval);
}

RunConfig load_config(const std::filesystem::path& path) {
    RunConfig cfg;
    apply_config(load_json(path), cfg);
    return cfg;
}

SdfScene parse_scene(const json& j) {
    check_keys(j, "scene", {"primitives"});
    if (!j.contains("primitives") || !j["primitives"].is_array() || j["primitives"].empty())
        throw InputError("scene: 'primitives' must be a non-empty array");
    SdfScene scene;
    for (std::size_t i = 0; i < j["primitives"].size(); ++i) {
        const json& p = j["primitives"][i];
        const std::string where = "scene.primitives[" + std::to_string(i) + "]";
        check_keys(p, where, {"shape", "center", "rotation", "size", "color"});
        Primitive prim;
        if (!p.contains("shape") || !p["shape"].is_string())
            throw InputError(where + ": 'shape' must be \"sphere\", \"box\" or \"torus\"");
        const std::string shape = p["shape"];
        if (shape == "sphere")
            prim.shape = Shape::Sphere;
        else if (shape == "box")
            prim.shape = Shape::Box;
        else if (shape == "torus")
            prim.shape = Shape::Torus;
        else
            throw InputError(where + ": unknown shape '" + shape + "'");
        if (p.contains("center"))
            prim.center = vec3(p["center"], where + ".center");
        if (p.contains("size"))
            prim.size = vec3(p["size"], where + ".size");
        if (p.contains("rotation")) {
            const json& r = p["rotation"];
            if (!r.is_array() || r.size() != 9)
                throw InputError(where + ".rotation must be 9 numbers (row-major 3x3)");
            for (int k = 0; k < 9; ++k)
                prim.rotation(k / 3, k % 3) = number(r[k], where + ".rotation");
            if (!(prim.rotation.transpose() * prim.rotation).isIdentity(1e-6) || prim.rotation.determinant() < 0.0)
                throw InputError(where + ".rotation must be a proper rotation matrix");
        }
        if (p.contains("color")) {
            const json& c = p["color"];
            const std::string cw = where + ".color";
            check_keys(c, cw, {"kind", "primary", "secondary", "n_azimuth", "n_polar"});
            if (c.contains("kind")) {
                const std::string kind = c["kind"].is_string() ? c["kind"].get<std::string>() : "";
                if (kind == "solid")
                    prim.color.kind = ColorFunction::Kind::Solid;
                else if (kind == "checker")
                    prim.color.kind = ColorFunction::Kind::Checker;
                else
                    throw InputError(cw + ".kind must be \"solid\" or \"checker\"");
            }
            if (c.contains("primary"))
                prim.color.primary = vec3(c["primary"], cw + ".primary");
            if (c.contains("secondary"))
                prim.color.secondary = vec3(c["secondary"], cw + ".secondary");
            opt(c, "n_azimuth", prim.color.n_azimuth, cw, integer);
            opt(c, "n_polar", prim.color.n_polar, cw, integer);
        }
        scene.primitives.push_back(prim);
    }
    scene.validate();
    return scene;
}

SdfScene load_scene(const std::filesystem::path& path) { return parse_scene(load_json(path)); }

json scene_to_json(const SdfScene& scene) {
    json prims = json::array();
    for (const Primitive& p : scene.primitives) {
        json rot = json::array();
        for (int k = 0; k < 9; ++k)
            rot.push_back(p.rotation(k / 3, k % 3));
        const char* shape = p.shape == Shape::Sphere ? "sphere" : p.shape == Shape::Box ? "box" : "torus";
        prims.push_back({{"shape", shape},
                         {"center", vec_json(p.center)},
                         {"rotation", rot},
                         {"size", vec_json(p.size)},
                         {"color",
                          {{"kind", p.color.kind == ColorFunction::Kind::Solid ? "solid" : "checker"},
                           {"primary", vec_json(p.color.primary)},
                           {"secondary", vec_json(p.color.secondary)},
                           {"n_azimuth", p.color.n_azimuth},
                           {"n_polar", p.color.n_polar}}}});
    }
    return {{"primitives", prims}};
}

} // namespace mvr::app
