#pragma once

#include "stiffen/mesh.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace stiffen {

enum class SeamSource { User, Auto };

/// Ordered chain of mesh edges. Consecutive edges share a vertex; no vertex repeats
/// except the first/last of a cycle.
struct SeamPath {
    std::vector<std::array<int, 2>> edges;
    SeamSource source = SeamSource::User;

    /// Vertex sequence along the path (size edges+1).
    std::vector<int> vertices() const;
};

/// Mesh derived from a parent, with the parent id of every vertex and face.
struct SubMesh {
    TriSurfaceMesh mesh;
    std::vector<int> parent_vertex;
    std::vector<int> parent_face;
};

/// Throws ValidationError when the seam is not a simple connected chain of mesh edges.
void validate_seam(const TriSurfaceMesh& mesh, const SeamPath& seam);

/// Opens the mesh along the seam: seam edges become boundary and every vertex whose
/// triangle fan is split by the seam gets one copy per fan piece. Faces keep their order.
/// Throws TopologyError if a closed input is still closed afterwards.
SubMesh cut_seam(const TriSurfaceMesh& mesh, const SeamPath& seam);

/// Closed: shortest path (3D edge length) between the ends of a two-pass farthest-point
/// sweep, extended by one edge when it is a single edge. MultiBoundary: shortest interior path joining the two longest boundary loops.
/// Returns nullopt for single-boundary meshes, which need no cut.
std::optional<SeamPath> auto_seam(const TriSurfaceMesh& mesh);

/// Per-triangle chart index.
struct ChartAssignment {
    std::vector<int> face_chart;
    int chart_count() const;
};

/// One submesh per chart, border vertices duplicated into every chart touching them.
/// Throws ValidationError when a chart is empty or not edge-connected.
std::vector<SubMesh> segment_charts(const TriSurfaceMesh& mesh, const ChartAssignment& assignment);

/// Built-in two-way split: each triangle goes to the nearer (graph distance) of the two
/// far-apart vertices used by auto_seam; stray components are merged into the other chart.
ChartAssignment split_two_way(const TriSurfaceMesh& mesh);

/// Dijkstra distances over mesh edges weighted by 3D length.
std::vector<double> edge_distances(const TriSurfaceMesh& mesh, std::span<const int> sources);

SeamPath read_seam_file(const std::filesystem::path& path);
void write_seam_file(const std::filesystem::path& path, const SeamPath& seam);
ChartAssignment read_chart_file(const std::filesystem::path& path);
void write_chart_file(const std::filesystem::path& path, const ChartAssignment& assignment);

}  // namespace stiffen
