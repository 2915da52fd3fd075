// Copyright Contributors to the mvrecon Project
// SPDX-License-Identifier: Apache-2.0
//
#include "mvrecon/io.hpp"

#include "mvrecon/error.hpp"

#include <json.hpp>
#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <sstream>

namespace mvr {

void validate_views(const ViewSet& views) {
    for (std::size_t k = 0; k < views.size(); ++k) {
        const View& v = views[k];
        const int w = v.camera.width(), h = v.camera.height();
        if (v.image.width() != w || v.image.height() != h || v.image.channels() != 3)
            throw InputError("view " + std::to_string(k) + ": image does not match its camera");
        if (v.mask.width() != w || v.mask.height() != h)
            throw InputError("view " + std::to_string(k) + ": mask does not match its camera");
        if (v.depth && (v.depth->width() != w || v.depth->height() != h || v.depth->channels() != 1))
            throw InputError("view " + std::to_string(k) + ": depth does not match its camera");
    }
}

namespace io {

using json = nlohmann::json;
static_assert(std::endian::native == std::endian::little, "binary writers assume a little-endian host");

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const fs::path& path, const char* mode) {
    FilePtr f(std::fopen(path.string().c_str(), mode));
    if (!f)
        throw InputError("cannot open " + path.string());
    return f;
}

std::ofstream open_out(const fs::path& path, bool binary = false) {
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out)
        throw InputError("cannot write " + path.string());
    return out;
}

std::ifstream open_in(const fs::path& path, bool binary = false) {
    std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
    if (!in)
        throw InputError("cannot read " + path.string());
    return in;
}

json read_json(const fs::path& path) {
    auto in = open_in(path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

void write_json(const fs::path& path, const json& j) {
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

std::uint8_t to_byte(double v) {
    if (!(v > 0.0))
        return 0;
    if (v >= 1.0)
        return 255;
    return static_cast<std::uint8_t>(std::lround(v * 255.0));
}

[[noreturn]] void png_fail(png_structp, png_const_charp msg) { throw InputError(std::string("png: ") + msg); }
void png_warn(png_structp, png_const_charp) {}

void write_png_bytes(const fs::path& path, int w, int h, int channels, const std::vector<std::uint8_t>& bytes) {
    auto f = open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
    png_infop info = png_create_info_struct(png);
    try {
        png_init_io(png, f.get());
        const int type = channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
        png_set_IHDR(png, info, w, h, 8, type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                     PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        for (int y = 0; y < h; ++y)
            png_write_row(png, bytes.data() + static_cast<std::size_t>(y) * w * channels);
        png_write_end(png, nullptr);
    } catch (...) {
        png_destroy_write_struct(&png, &info);
        throw;
    }
    png_destroy_write_struct(&png, &info);
}

} // namespace

std::string frame_name(std::size_t k) {
    std::ostringstream s;
    s << std::setw(3) << std::setfill('0') << k << ".png";
    return s.str();
}

void write_png(const fs::path& path, const Image& img) {
    if (img.channels() != 1 && img.channels() != 3)
        throw InputError("write_png: only 1 or 3 channel images are supported");
    std::vector<std::uint8_t> bytes(img.size());
    std::transform(img.data().begin(), img.data().end(), bytes.begin(), to_byte);
    write_png_bytes(path, img.width(), img.height(), img.channels(), bytes);
}

void write_mask_png(const fs::path& path, const Mask& mask) {
    std::vector<std::uint8_t> bytes(mask.bits().size());
    std::transform(mask.bits().begin(), mask.bits().end(), bytes.begin(),
                   [](std::uint8_t b) { return b ? std::uint8_t{255} : std::uint8_t{0}; });
    write_png_bytes(path, mask.width(), mask.height(), 1, bytes);
}

Image read_png(const fs::path& path) {
    auto f = open_file(path, "rb");
    png_byte sig[8];
    if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
        throw InputError(path.string() + ": not a PNG file");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
    png_infop info = png_create_info_struct(png);
    Image img;
    try {
        png_init_io(png, f.get());
        png_set_sig_bytes(png, 8);
        png_read_info(png, info);
        png_set_strip_16(png);
        png_set_packing(png);
        const int type = png_get_color_type(png, info);
        if (type == PNG_COLOR_TYPE_PALETTE)
            png_set_palette_to_rgb(png);
        if (type == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8)
            png_set_expand_gray_1_2_4_to_8(png);
        if (png_get_valid(png, info, PNG_INFO_tRNS))
            png_set_tRNS_to_alpha(png);
        png_read_update_info(png, info);
        const int w = static_cast<int>(png_get_image_width(png, info));
        const int h = static_cast<int>(png_get_image_height(png, info));
        const int c = png_get_channels(png, info);
        std::vector<std::uint8_t> bytes(static_cast<std::size_t>(w) * h * c);
        std::vector<png_bytep> rows(h);
        for (int y = 0; y < h; ++y)
            rows[y] = bytes.data() + static_cast<std::size_t>(y) * w * c;
        png_read_image(png, rows.data());
        png_read_end(png, nullptr);
        img = Image(w, h, c);
        std::transform(bytes.begin(), bytes.end(), img.data().begin(),
                       [](std::uint8_t b) { return b / 255.0; });
    } catch (...) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw;
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

Mask read_mask_png(const fs::path& path) {
    const Image img = read_png(path);
    const int c = img.channels();
    const int src = (c == 2 || c == 4) ? c - 1 : 0;
    Mask m(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            m.set(x, y, img.at(x, y, src) >= 0.5);
    return m;
}

Image to_rgb(const Image& img) {
    if (img.channels() == 3)
        return img;
    Image out(img.width(), img.height(), 3);
    const bool gray = img.channels() <= 2;
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            for (int c = 0; c < 3; ++c)
                out.at(x, y, c) = img.at(x, y, gray ? 0 : c);
    return out;
}

Image quantize8(const Image& img) {
    Image out = img;
    for (double& v : out.data())
        v = to_byte(v) / 255.0;
    return out;
}

// ---------------------------------------------------------------------------
// Cameras

void write_cameras(const fs::path& path, std::span<const Camera> cameras) {
    json arr = json::array();
    for (const Camera& cam : cameras) {
        const Eigen::Matrix4d m = cam.camera_to_world().matrix();
        std::vector<double> flat;
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c)
                flat.push_back(m(r, c));
        arr.push_back({{"width", cam.width()},
                       {"height", cam.height()},
                       {"fx", cam.fx()},
                       {"fy", cam.fy()},
                       {"cx", cam.cx()},
                       {"cy", cam.cy()},
                       {"world_from_camera", flat}});
    }
    write_json(path, json{{"cameras", arr}});
}

std::vector<Camera> read_cameras(const fs::path& path) {
    const json j = read_json(path);
    const json& arr = j.is_array() ? j : j.value("cameras", json());
    if (!arr.is_array())
        throw InputError(path.string() + ": expected a camera array");
    std::vector<Camera> cams;
    try {
        for (const json& e : arr) {
            const auto flat = e.at("world_from_camera").get<std::vector<double>>();
            if (flat.size() != 16)
                throw InputError(path.string() + ": world_from_camera must have 16 entries");
            Eigen::Matrix4d m;
            for (int r = 0; r < 4; ++r)
                for (int c = 0; c < 4; ++c)
                    m(r, c) = flat[r * 4 + c];
            cams.emplace_back(e.at("width").get<int>(), e.at("height").get<int>(), e.at("fx").get<double>(),
                              e.at("fy").get<double>(), e.at("cx").get<double>(), e.at("cy").get<double>(),
                              Rigid::from_matrix(m).inverse());
        }
    } catch (const json::exception& e) {
        throw InputError(path.string() + ": " + e.what());
    }
    return cams;
}

// ---------------------------------------------------------------------------
// PLY

namespace {

struct PlyProperty {
    std::string name;
    std::string type;
    std::size_t offset = 0;
};

struct PlyVertexLayout {
    std::size_t count = 0;
    std::size_t stride = 0;
    std::vector<PlyProperty> props;

    const PlyProperty* find(const std::string& n) const {
        for (const auto& p : props)
            if (p.name == n)
                return &p;
        return nullptr;
    }
};

std::size_t ply_type_size(const std::string& t) {
    if (t == "char" || t == "uchar" || t == "int8" || t == "uint8")
        return 1;
    if (t == "short" || t == "ushort" || t == "int16" || t == "uint16")
        return 2;
    if (t == "int" || t == "uint" || t == "float" || t == "int32" || t == "uint32" || t == "float32")
        return 4;
    if (t == "double" || t == "float64")
        return 8;
    throw InputError("ply: unsupported property type " + t);
}

template <typename T>
T load(const char* p) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return v;
}

double read_scalar(const char* p, const std::string& t) {
    if (t == "float" || t == "float32")
        return load<float>(p);
    if (t == "double" || t == "float64")
        return load<double>(p);
    if (t == "uchar" || t == "uint8")
        return load<std::uint8_t>(p);
    if (t == "char" || t == "int8")
        return load<std::int8_t>(p);
    if (t == "short" || t == "int16")
        return load<std::int16_t>(p);
    if (t == "ushort" || t == "uint16")
        return load<std::uint16_t>(p);
    if (t == "int" || t == "int32")
        return load<std::int32_t>(p);
    return load<std::uint32_t>(p);
}

/// Parses the header and returns the layout of the leading "vertex" element; the stream
/// is left at the start of the binary payload.
PlyVertexLayout read_ply_header(std::istream& in, const fs::path& path) {
    std::string line;
    if (!std::getline(in, line) || line != "ply")
        throw InputError(path.string() + ": not a PLY file");
    PlyVertexLayout layout;
    bool in_vertex = false, seen_vertex = false, binary = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        std::istringstream s(line);
        std::string key;
        s >> key;
        if (key == "format") {
            std::string fmt;
            s >> fmt;
            binary = fmt == "binary_little_endian";
        } else if (key == "element") {
            std::string name;
            std::size_t n = 0;
            s >> name >> n;
            in_vertex = name == "vertex";
            if (in_vertex) {
                if (seen_vertex)
                    throw InputError(path.string() + ": duplicate vertex element");
                if (layout.stride != 0 || !layout.props.empty())
                    throw InputError(path.string() + ": vertex element must come first");
                layout.count = n;
                seen_vertex = true;
            }
        } else if (key == "property" && in_vertex) {
            std::string type, name;
            s >> type;
            if (type == "list")
                throw InputError(path.string() + ": list properties on vertices are not supported");
            s >> name;
            layout.props.push_back({name, type, layout.stride});
            layout.stride += ply_type_size(type);
        } else if (key == "end_header") {
            if (!binary)
                throw InputError(path.string() + ": only binary_little_endian PLY is supported");
            if (!seen_vertex)
                throw InputError(path.string() + ": no vertex element");
            return layout;
        }
    }
    throw InputError(path.string() + ": truncated PLY header");
}

struct PlyTable {
    PlyVertexLayout layout;
    std::vector<char> data;

    double get(std::size_t row, const PlyProperty& p) const {
        return read_scalar(data.data() + row * layout.stride + p.offset, p.type);
    }
};

PlyTable read_ply_vertices(const fs::path& path) {
    auto in = open_in(path, true);
    PlyTable t{read_ply_header(in, path), {}};
    t.data.resize(t.layout.count * t.layout.stride);
    in.read(t.data.data(), static_cast<std::streamsize>(t.data.size()));
    if (static_cast<std::size_t>(in.gcount()) != t.data.size())
        throw InputError(path.string() + ": truncated PLY payload");
    return t;
}

const PlyProperty& require_prop(const PlyTable& t, const std::string& name, const fs::path& path) {
    const PlyProperty* p = t.layout.find(name);
    if (!p)
        throw InputError(path.string() + ": missing property " + name);
    return *p;
}

void write_float_rows(std::ostream& out, std::size_t n, std::size_t width,
                      const std::function<void(std::size_t, float*)>& row) {
    std::vector<float> buf(width);
    for (std::size_t i = 0; i < n; ++i) {
        row(i, buf.data());
        out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(width * sizeof(float)));
    }
}

void write_header(std::ostream& out, std::size_t n, const std::vector<std::string>& float_props) {
    out << "ply\nformat binary_little_endian 1.0\nelement vertex " << n << '\n';
    for (const auto& p : float_props)
        out << "property float " << p << '\n';
    out << "end_header\n";
}

} // namespace

void write_point_ply(const fs::path& path, const PointSet& points) {
    const bool normals = !points.normals.empty();
    if (normals && points.normals.size() != points.points.size())
        throw InputError("write_point_ply: normals and points differ in length");
    auto out = open_out(path, true);
    std::vector<std::string> props{"x", "y", "z"};
    if (normals)
        props.insert(props.end(), {"nx", "ny", "nz"});
    write_header(out, points.points.size(), props);
    write_float_rows(out, points.points.size(), props.size(), [&](std::size_t i, float* r) {
        for (int c = 0; c < 3; ++c) {
            r[c] = static_cast<float>(points.points[i][c]);
            if (normals)
                r[3 + c] = static_cast<float>(points.normals[i][c]);
        }
    });
}

PointSet read_point_ply(const fs::path& path) {
    const PlyTable t = read_ply_vertices(path);
    const PlyProperty* px[3] = {&require_prop(t, "x", path), &require_prop(t, "y", path), &require_prop(t, "z", path)};
    const PlyProperty* pn[3] = {t.layout.find("nx"), t.layout.find("ny"), t.layout.find("nz")};
    const bool normals = pn[0] && pn[1] && pn[2];
    PointSet ps;
    ps.points.resize(t.layout.count);
    if (normals)
        ps.normals.resize(t.layout.count);
    for (std::size_t i = 0; i < t.layout.count; ++i)
        for (int c = 0; c < 3; ++c) {
            ps.points[i][c] = t.get(i, *px[c]);
            if (normals)
                ps.normals[i][c] = t.get(i, *pn[c]);
        }
    return ps;
}

namespace {
const std::vector<std::string> kGaussianProps = {"x",     "y",     "z",     "scale_0", "scale_1", "scale_2",
                                                 "rot_0", "rot_1", "rot_2", "rot_3",   "opacity", "red",
                                                 "green", "blue"};
}

void write_gaussian_ply(const fs::path& path, const GaussianSet& gs) {
    gs.validate();
    auto out = open_out(path, true);
    write_header(out, gs.count(), kGaussianProps);
    write_float_rows(out, gs.count(), kGaussianProps.size(), [&](std::size_t i, float* r) {
        for (int c = 0; c < 3; ++c) {
            r[c] = static_cast<float>(gs.positions[i][c]);
            r[3 + c] = static_cast<float>(gs.log_scales[i][c]);
            r[11 + c] = static_cast<float>(gs.colors[i][c]);
        }
        for (int c = 0; c < 4; ++c)
            r[6 + c] = static_cast<float>(gs.rotations[i][c]);
        r[10] = static_cast<float>(gs.opacity_logits[i]);
    });
}

GaussianSet read_gaussian_ply(const fs::path& path) {
    const PlyTable t = read_ply_vertices(path);
    std::vector<const PlyProperty*> p;
    for (const auto& name : kGaussianProps)
        p.push_back(&require_prop(t, name, path));
    GaussianSet gs;
    for (std::size_t i = 0; i < t.layout.count; ++i) {
        auto v = [&](int k) { return t.get(i, *p[k]); };
        gs.positions.emplace_back(v(0), v(1), v(2));
        gs.log_scales.emplace_back(v(3), v(4), v(5));
        gs.rotations.emplace_back(v(6), v(7), v(8), v(9));
        gs.opacity_logits.push_back(v(10));
        gs.colors.emplace_back(v(11), v(12), v(13));
    }
    gs.validate();
    return gs;
}

// ---------------------------------------------------------------------------
// Meshes

void write_obj(const fs::path& path, const TexturedMesh& tm) {
    tm.validate();
    auto out = open_out(path);
    out << std::setprecision(9);
    const auto& m = tm.mesh;
    for (std::size_t i = 0; i < m.vertices.size(); ++i) {
        const Vec3& v = m.vertices[i];
        const Rgb& c = tm.vertex_colors[i];
        out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << ' ' << c.x() << ' ' << c.y() << ' ' << c.z()
            << '\n';
    }
    for (const Face& f : m.faces)
        out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

TexturedMesh read_obj(const fs::path& path) {
    auto in = open_in(path);
    TexturedMesh tm;
    std::string line;
    std::size_t lineno = 0;
    auto fail = [&](const std::string& what) {
        throw InputError(path.string() + ":" + std::to_string(lineno) + ": " + what);
    };
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream s(line);
        std::string key;
        s >> key;
        if (key == "v") {
            std::vector<double> vals;
            double x;
            while (s >> x)
                vals.push_back(x);
            if (vals.size() != 3 && vals.size() != 6)
                fail("expected 3 or 6 vertex values");
            tm.mesh.vertices.emplace_back(vals[0], vals[1], vals[2]);
            tm.vertex_colors.push_back(vals.size() == 6 ? Rgb(vals[3], vals[4], vals[5]) : Rgb::Constant(0.5));
        } else if (key == "f") {
            std::vector<long> idx;
            std::string tok;
            while (s >> tok) {
                const long k = std::strtol(tok.c_str(), nullptr, 10); // "a/b/c" keeps the position index
                if (k == 0)
                    fail("bad face index");
                idx.push_back(k > 0 ? k - 1 : static_cast<long>(tm.mesh.vertices.size()) + k);
            }
            if (idx.size() < 3)
                fail("face with fewer than 3 vertices");
            for (std::size_t k = 1; k + 1 < idx.size(); ++k) // fan triangulation
                tm.mesh.faces.push_back({static_cast<std::uint32_t>(idx[0]), static_cast<std::uint32_t>(idx[k]),
                                         static_cast<std::uint32_t>(idx[k + 1])});
        }
    }
    validate_indices(tm.mesh);
    return tm;
}

void write_mesh_ply(const fs::path& path, const TexturedMesh& tm) {
    tm.validate();
    auto out = open_out(path, true);
    const auto& m = tm.mesh;
    out << "ply\nformat binary_little_endian 1.0\nelement vertex " << m.vertices.size()
        << "\nproperty float x\nproperty float y\nproperty float z\n"
           "property uchar red\nproperty uchar green\nproperty uchar blue\n"
        << "element face " << m.faces.size() << "\nproperty list uchar uint vertex_indices\nend_header\n";
    for (std::size_t i = 0; i < m.vertices.size(); ++i) {
        const float p[3] = {static_cast<float>(m.vertices[i].x()), static_cast<float>(m.vertices[i].y()),
                            static_cast<float>(m.vertices[i].z())};
        const std::uint8_t c[3] = {to_byte(tm.vertex_colors[i].x()), to_byte(tm.vertex_colors[i].y()),
                                   to_byte(tm.vertex_colors[i].z())};
        out.write(reinterpret_cast<const char*>(p), sizeof(p));
        out.write(reinterpret_cast<const char*>(c), sizeof(c));
    }
    for (const Face& f : m.faces) {
        const std::uint8_t n = 3;
        out.write(reinterpret_cast<const char*>(&n), 1);
        out.write(reinterpret_cast<const char*>(f.data()), sizeof(std::uint32_t) * 3);
    }
}

// ---------------------------------------------------------------------------
// Grids

namespace {
fs::path with_ext(const fs::path& stem, const char* ext) {
    fs::path p = stem;
    p += ext;
    return p;
}
} // namespace

void write_grid(const fs::path& stem, const VoxelGrid& grid) {
    {
        auto out = open_out(with_ext(stem, ".bin"), true);
        const std::size_t nbytes = (grid.cell_count() + 7) / 8;
        out.write(reinterpret_cast<const char*>(grid.words().data()), static_cast<std::streamsize>(nbytes));
    }
    const Aabb& b = grid.bounds();
    write_json(with_ext(stem, ".json"),
               json{{"resolution", grid.resolution()},
                    {"aabb", {{"min", {b.min.x(), b.min.y(), b.min.z()}}, {"max", {b.max.x(), b.max.y(), b.max.z()}}}},
                    {"bit_order", "index (k*R + j)*R + i, LSB first"}});
}

VoxelGrid read_grid(const fs::path& stem) {
    const json j = read_json(with_ext(stem, ".json"));
    int r = 0;
    Aabb b;
    try {
        r = j.at("resolution").get<int>();
        const auto lo = j.at("aabb").at("min").get<std::vector<double>>();
        const auto hi = j.at("aabb").at("max").get<std::vector<double>>();
        if (lo.size() != 3 || hi.size() != 3)
            throw InputError("grid: aabb corners need 3 entries");
        b.min = Vec3(lo[0], lo[1], lo[2]);
        b.max = Vec3(hi[0], hi[1], hi[2]);
    } catch (const json::exception& e) {
        throw InputError(with_ext(stem, ".json").string() + ": " + e.what());
    }
    VoxelGrid g(r, b);
    auto in = open_in(with_ext(stem, ".bin"), true);
    const std::size_t nbytes = (g.cell_count() + 7) / 8;
    in.read(reinterpret_cast<char*>(g.words().data()), static_cast<std::streamsize>(nbytes));
    if (static_cast<std::size_t>(in.gcount()) != nbytes)
        throw InputError(with_ext(stem, ".bin").string() + ": size does not match resolution");
    return g;
}

// ---------------------------------------------------------------------------
// Traces and metrics

void write_trace_csv(const fs::path& path, const std::vector<LossRecord>& trace) {
    auto out = open_out(path);
    out << "iteration,mse,dssim,perceptual,total\n" << std::setprecision(17);
    for (const LossRecord& r : trace)
        out << r.iteration << ',' << r.mse << ',' << r.dssim << ',' << r.perceptual << ',' << r.total << '\n';
}

std::vector<LossRecord> read_trace_csv(const fs::path& path) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("iteration,mse,dssim,perceptual,total", 0) != 0)
        throw InputError(path.string() + ": unexpected CSV header");
    std::vector<LossRecord> trace;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        LossRecord r;
        char sep[4];
        std::istringstream s(line);
        if (!(s >> r.iteration >> sep[0] >> r.mse >> sep[1] >> r.dssim >> sep[2] >> r.perceptual >> sep[3] >>
              r.total))
            throw InputError(path.string() + ": malformed row: " + line);
        trace.push_back(r);
    }
    return trace;
}

void write_metrics_json(const fs::path& path, const MetricReport& report) {
    auto opt = [](const auto& v) { return v ? json(*v) : json(nullptr); };
    write_json(path, json{{"psnr", opt(report.psnr)},
                          {"ssim", opt(report.ssim)},
                          {"perceptual", opt(report.perceptual)},
                          {"chamfer", opt(report.chamfer)},
                          {"n_points", opt(report.n_points)}});
}

MetricReport read_metrics_json(const fs::path& path) {
    const json j = read_json(path);
    MetricReport r;
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key) && !j[key].is_null())
            field = j[key].get<typename std::remove_reference_t<decltype(field)>::value_type>();
    };
    try {
        get("psnr", r.psnr);
        get("ssim", r.ssim);
        get("perceptual", r.perceptual);
        get("chamfer", r.chamfer);
        get("n_points", r.n_points);
    } catch (const json::exception& e) {
        throw InputError(path.string() + ": " + e.what());
    }
    return r;
}

// ---------------------------------------------------------------------------
// Datasets

void write_dataset(const fs::path& dir, const ViewSet& views) {
    validate_views(views);
    std::error_code ec;
    fs::create_directories(dir / "images", ec);
    fs::create_directories(dir / "masks", ec);
    if (ec)
        throw InputError("cannot create dataset directory " + dir.string() + ": " + ec.message());
    std::vector<Camera> cams;
    for (std::size_t k = 0; k < views.size(); ++k) {
        write_png(dir / "images" / frame_name(k), views[k].image);
        write_mask_png(dir / "masks" / frame_name(k), views[k].mask);
        cams.push_back(views[k].camera);
    }
    write_cameras(dir / "cameras.json", cams);
}

ViewSet read_dataset(const fs::path& dir) {
    const auto cams = read_cameras(dir / "cameras.json");
    ViewSet views;
    for (std::size_t k = 0; k < cams.size(); ++k) {
        const fs::path img = dir / "images" / frame_name(k);
        const fs::path msk = dir / "masks" / frame_name(k);
        if (!fs::exists(img))
            throw InputError("missing image " + img.string());
        if (!fs::exists(msk))
            throw InputError("missing mask " + msk.string());
        views.push_back(View{cams[k], to_rgb(read_png(img)), read_mask_png(msk), std::nullopt});
    }
    validate_views(views);
    return views;
}

} // namespace io
} // namespace mvr
