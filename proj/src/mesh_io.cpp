#include "stiffen/mesh_io.hpp"

#include "stiffen/error.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <limits>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <vector>

namespace stiffen {

std::string format_double(double value)
{
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc{}) throw IoError("cannot format number");
    return std::string(buf.data(), ptr);
}

double parse_double(std::string_view text)
{
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
        text.remove_suffix(1);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw IoError("invalid number '" + std::string(text) + "'");
    return value;
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace {

std::vector<std::string_view> split_ws(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

int parse_index(std::string_view tok, int count, int line_no)
{
    int value = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc{} || ptr != tok.data() + tok.size() || value == 0)
        throw IoError("OBJ line " + std::to_string(line_no) + ": bad index '" + std::string(tok) +
                      "'");
    return value > 0 ? value - 1 : count + value;
}

LoadedSurface load_obj(std::string_view bytes)
{
    std::vector<Eigen::Vector3d> positions;
    std::vector<Eigen::Vector2d> texcoords;
    std::vector<std::array<int, 3>> faces;
    std::vector<std::array<int, 3>> face_tex;
    bool any_tex = false;

    int line_no = 0;
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        std::size_t end = bytes.find('\n', pos);
        if (end == std::string_view::npos) end = bytes.size();
        std::string_view line = bytes.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        const auto tok = split_ws(line);
        if (tok.empty()) continue;
        if (tok[0] == "v") {
            if (tok.size() < 4) throw IoError("OBJ line " + std::to_string(line_no) + ": short v");
            positions.emplace_back(parse_double(tok[1]), parse_double(tok[2]), parse_double(tok[3]));
        } else if (tok[0] == "vt") {
            if (tok.size() < 3) throw IoError("OBJ line " + std::to_string(line_no) + ": short vt");
            texcoords.emplace_back(parse_double(tok[1]), parse_double(tok[2]));
        } else if (tok[0] == "f") {
            if (tok.size() < 4) throw IoError("OBJ line " + std::to_string(line_no) + ": short f");
            std::vector<int> vs, ts;
            for (std::size_t i = 1; i < tok.size(); ++i) {
                const std::string_view t = tok[i];
                const auto slash = t.find('/');
                vs.push_back(parse_index(t.substr(0, slash), static_cast<int>(positions.size()),
                                         line_no));
                int ti = -1;
                if (slash != std::string_view::npos) {
                    std::string_view rest = t.substr(slash + 1);
                    const auto slash2 = rest.find('/');
                    rest = rest.substr(0, slash2);
                    if (!rest.empty())
                        ti = parse_index(rest, static_cast<int>(texcoords.size()), line_no);
                }
                ts.push_back(ti);
            }
            for (std::size_t i = 1; i + 1 < vs.size(); ++i) {
                faces.push_back({vs[0], vs[i], vs[i + 1]});
                face_tex.push_back({ts[0], ts[i], ts[i + 1]});
                if (ts[0] >= 0 || ts[i] >= 0 || ts[i + 1] >= 0) any_tex = true;
            }
        }
    }

    Eigen::MatrixX3d V(static_cast<Eigen::Index>(positions.size()), 3);
    for (std::size_t i = 0; i < positions.size(); ++i)
        V.row(static_cast<Eigen::Index>(i)) = positions[i].transpose();
    Eigen::MatrixX3i F(static_cast<Eigen::Index>(faces.size()), 3);
    for (std::size_t i = 0; i < faces.size(); ++i)
        for (int k = 0; k < 3; ++k) {
            const int v = faces[i][static_cast<std::size_t>(k)];
            if (v < 0 || v >= static_cast<int>(positions.size()))
                throw MeshError("OBJ face references missing vertex " + std::to_string(v + 1));
            F(static_cast<Eigen::Index>(i), k) = v;
        }

    LoadedSurface out;
    out.mesh = TriSurfaceMesh(std::move(V), std::move(F), &out.report);

    if (any_tex) {
        // Per-vertex uv; a vertex carrying two different texture coordinates is a seam
        // encoded in the file and is not supported by the one-vt-per-vertex chart format.
        Eigen::MatrixX2d uv = Eigen::MatrixX2d::Constant(out.mesh.num_vertices(), 2,
                                                         std::numeric_limits<double>::quiet_NaN());
        for (std::size_t i = 0; i < faces.size(); ++i) {
            for (int k = 0; k < 3; ++k) {
                const int ti = face_tex[i][static_cast<std::size_t>(k)];
                const int v = out.report.vertex_map[static_cast<std::size_t>(faces[i][static_cast<std::size_t>(k)])];
                if (v < 0) continue;
                if (ti < 0 || ti >= static_cast<int>(texcoords.size()))
                    throw IoError("OBJ face corner without valid vt index");
                const Eigen::RowVector2d t = texcoords[static_cast<std::size_t>(ti)].transpose();
                if (std::isnan(uv(v, 0))) uv.row(v) = t;
                else if (uv.row(v) != t)
                    throw IoError("OBJ vertex " + std::to_string(v + 1) +
                                  " has several texture coordinates");
            }
        }
        out.uv = std::move(uv);
    }
    return out;
}

bool looks_binary_stl(std::string_view bytes)
{
    if (bytes.size() < 84) return false;
    std::uint32_t count = 0;
    std::memcpy(&count, bytes.data() + 80, 4);
    return 84 + 50ull * count == bytes.size();
}

LoadedSurface weld(const std::vector<std::array<Eigen::Vector3d, 3>>& facets)
{
    std::map<std::array<double, 3>, int> index;
    std::vector<Eigen::Vector3d> verts;
    Eigen::MatrixX3i F(static_cast<Eigen::Index>(facets.size()), 3);
    for (std::size_t f = 0; f < facets.size(); ++f) {
        for (int k = 0; k < 3; ++k) {
            const auto& p = facets[f][static_cast<std::size_t>(k)];
            const std::array<double, 3> key{p.x(), p.y(), p.z()};
            auto [it, inserted] = index.emplace(key, static_cast<int>(verts.size()));
            if (inserted) verts.push_back(p);
            F(static_cast<Eigen::Index>(f), k) = it->second;
        }
    }
    Eigen::MatrixX3d V(static_cast<Eigen::Index>(verts.size()), 3);
    for (std::size_t i = 0; i < verts.size(); ++i) V.row(static_cast<Eigen::Index>(i)) = verts[i];
    LoadedSurface out;
    out.mesh = TriSurfaceMesh(std::move(V), std::move(F), &out.report);
    return out;
}

LoadedSurface load_stl(std::string_view bytes)
{
    std::vector<std::array<Eigen::Vector3d, 3>> facets;
    if (looks_binary_stl(bytes)) {
        std::uint32_t count = 0;
        std::memcpy(&count, bytes.data() + 80, 4);
        facets.reserve(count);
        for (std::uint32_t i = 0; i < count; ++i) {
            const char* rec = bytes.data() + 84 + 50 * static_cast<std::size_t>(i);
            std::array<float, 12> data{};
            std::memcpy(data.data(), rec, 48);
            std::array<Eigen::Vector3d, 3> tri;
            for (int k = 0; k < 3; ++k)
                tri[static_cast<std::size_t>(k)] =
                    Eigen::Vector3d(data[3 + 3 * k], data[4 + 3 * k], data[5 + 3 * k]);
            facets.push_back(tri);
        }
    } else {
        std::size_t pos = 0;
        std::vector<Eigen::Vector3d> pending;
        bool saw_solid = false;
        while (pos < bytes.size()) {
            std::size_t end = bytes.find('\n', pos);
            if (end == std::string_view::npos) end = bytes.size();
            const auto tok = split_ws(bytes.substr(pos, end - pos));
            pos = end + 1;
            if (tok.empty()) continue;
            if (tok[0] == "solid") saw_solid = true;
            if (tok[0] == "vertex") {
                if (tok.size() < 4) throw IoError("STL: short vertex record");
                pending.emplace_back(parse_double(tok[1]), parse_double(tok[2]),
                                     parse_double(tok[3]));
            } else if (tok[0] == "endfacet") {
                if (pending.size() != 3) throw IoError("STL: facet without exactly 3 vertices");
                facets.push_back({pending[0], pending[1], pending[2]});
                pending.clear();
            }
        }
        if (!saw_solid) throw IoError("STL: neither binary nor ASCII ('solid' header missing)");
    }
    if (facets.empty()) throw MeshError("empty mesh");
    return weld(facets);
}

}  // namespace

LoadedSurface load_surface(std::string_view bytes, MeshFormat format)
{
    return format == MeshFormat::Obj ? load_obj(bytes) : load_stl(bytes);
}

MeshFormat format_from_path(const std::filesystem::path& path)
{
    std::string ext = path.extension().string();
    for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (ext == ".obj") return MeshFormat::Obj;
    if (ext == ".stl") return MeshFormat::Stl;
    throw ValidationError("unknown mesh format '" + ext + "' (supported: .obj, .stl)");
}

LoadedSurface load_surface_file(const std::filesystem::path& path)
{
    return load_surface_file(path, format_from_path(path));
}

LoadedSurface load_surface_file(const std::filesystem::path& path, MeshFormat format)
{
    const std::string bytes = read_file(path);
    return load_surface(bytes, format);
}

void write_obj(std::ostream& out, const TriSurfaceMesh& mesh, const Eigen::MatrixX2d* uv)
{
    if (uv && uv->rows() != mesh.num_vertices())
        throw ValidationError("uv row count does not match vertex count");
    for (int v = 0; v < mesh.num_vertices(); ++v)
        out << "v " << format_double(mesh.vertices()(v, 0)) << ' '
            << format_double(mesh.vertices()(v, 1)) << ' '
            << format_double(mesh.vertices()(v, 2)) << '\n';
    if (uv)
        for (int v = 0; v < mesh.num_vertices(); ++v)
            out << "vt " << format_double((*uv)(v, 0)) << ' ' << format_double((*uv)(v, 1)) << '\n';
    for (int f = 0; f < mesh.num_faces(); ++f) {
        out << 'f';
        for (int k = 0; k < 3; ++k) {
            const int i = mesh.corner(f, k) + 1;
            out << ' ' << i;
            if (uv) out << '/' << i;
        }
        out << '\n';
    }
}

void write_obj_file(const std::filesystem::path& path, const TriSurfaceMesh& mesh,
                    const Eigen::MatrixX2d* uv)
{
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    write_obj(out, mesh, uv);
}

}  // namespace stiffen
