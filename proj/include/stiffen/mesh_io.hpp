#pragma once

#include "stiffen/mesh.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string_view>

namespace stiffen {

enum class MeshFormat { Obj, Stl };

struct LoadedSurface {
    TriSurfaceMesh mesh;
    MeshBuildReport report;
    /// Per-vertex texture coordinates when the OBJ carried `vt` records.
    std::optional<Eigen::MatrixX2d> uv;
};

/// Parses OBJ (v / vt / f records, polygons fan-triangulated) or STL (ASCII or binary
/// little-endian). STL facets are welded by exact coordinate equality.
LoadedSurface load_surface(std::string_view bytes, MeshFormat format);
LoadedSurface load_surface_file(const std::filesystem::path& path);
LoadedSurface load_surface_file(const std::filesystem::path& path, MeshFormat format);
MeshFormat format_from_path(const std::filesystem::path& path);

/// Writes `v` and `f` records (and one `vt` per vertex when uv is given) using the
/// shortest round-trip decimal representation, so a reload is bit-exact.
void write_obj(std::ostream& out, const TriSurfaceMesh& mesh,
               const Eigen::MatrixX2d* uv = nullptr);
void write_obj_file(const std::filesystem::path& path, const TriSurfaceMesh& mesh,
                    const Eigen::MatrixX2d* uv = nullptr);

/// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);
double parse_double(std::string_view text);

std::string read_file(const std::filesystem::path& path);

}  // namespace stiffen
