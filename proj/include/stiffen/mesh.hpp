#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace stiffen {

/// Directed edge record. Half-edge `3*f + k` runs from corner k to corner k+1 of face f.
struct HalfEdge {
    int from = -1;
    int to = -1;
    int twin = -1;  ///< -1 on the boundary
    int next = -1;
    int face = -1;
    int edge = -1;  ///< undirected edge id
};

enum class TopologyTag { Closed, SingleBoundary, MultiBoundary };

struct TopologyClass {
    TopologyTag tag = TopologyTag::Closed;
    int boundary_count = 0;
    int euler_characteristic = 0;
    int genus = 0;
};

const char* to_string(TopologyTag tag);

/// What the constructor removed or changed while validating the input.
struct MeshBuildReport {
    int dropped_degenerate = 0;
    int dropped_duplicate = 0;
    int dropped_unreferenced = 0;
    int reoriented = 0;
    std::vector<int> vertex_map;  ///< input vertex -> output vertex, -1 when removed
    std::vector<int> face_map;    ///< output face -> input face
    std::vector<std::string> warnings;
};

/// Immutable, consistently oriented, manifold triangle mesh with half-edge adjacency.
///
/// Construction drops zero-area and duplicate triangles (area below 1e-12 times the
/// squared bounding-box diagonal) and unreferenced vertices, propagates a consistent
/// orientation from the lowest-index face of each connected component, and rejects
/// non-manifold edges or vertices with a MeshError. Boundary loops are ordered so that
/// the surface lies to the left of the traversal direction.
class TriSurfaceMesh {
public:
    TriSurfaceMesh() = default;
    TriSurfaceMesh(Eigen::MatrixX3d vertices, Eigen::MatrixX3i triangles,
                   MeshBuildReport* report = nullptr);

    const Eigen::MatrixX3d& vertices() const noexcept { return vertices_; }
    const Eigen::MatrixX3i& triangles() const noexcept { return triangles_; }

    int num_vertices() const noexcept { return static_cast<int>(vertices_.rows()); }
    int num_faces() const noexcept { return static_cast<int>(triangles_.rows()); }
    int num_edges() const noexcept { return static_cast<int>(edges_.size()); }

    Eigen::Vector3d position(int v) const { return vertices_.row(v).transpose(); }
    int corner(int f, int k) const { return triangles_(f, k); }

    std::span<const HalfEdge> half_edges() const noexcept { return half_edges_; }
    const HalfEdge& half_edge(int h) const { return half_edges_[static_cast<std::size_t>(h)]; }
    int prev(int h) const { return 3 * (h / 3) + (h % 3 + 2) % 3; }

    /// Undirected edges as (a, b) with a < b, sorted lexicographically.
    std::span<const std::array<int, 2>> edges() const noexcept { return edges_; }

    /// Any outgoing half-edge of v; the boundary one when v lies on the boundary.
    int outgoing(int v) const { return outgoing_[static_cast<std::size_t>(v)]; }
    bool is_boundary_vertex(int v) const { return half_edge(outgoing(v)).twin < 0; }

    /// -1 when there is no directed edge a -> b.
    int find_half_edge(int a, int b) const;
    /// -1 when a and b are not adjacent.
    int find_edge(int a, int b) const;

    const std::vector<std::vector<int>>& boundary_loops() const noexcept { return boundary_loops_; }

    double face_area(int f) const;
    Eigen::Vector3d face_normal(int f) const;  ///< unit
    double total_area() const;
    /// Area-weighted average of incident face normals, normalized.
    Eigen::MatrixX3d vertex_normals() const;
    Eigen::AlignedBox3d bounding_box() const;
    double mean_edge_length() const;

private:
    void build_connectivity();

    Eigen::MatrixX3d vertices_;
    Eigen::MatrixX3i triangles_;
    std::vector<HalfEdge> half_edges_;
    std::vector<std::array<int, 2>> edges_;
    std::vector<int> outgoing_;
    std::vector<std::vector<int>> boundary_loops_;
    std::unordered_map<std::uint64_t, int> directed_;
};

TopologyClass classify_topology(const TriSurfaceMesh& mesh);

/// Neighbors of `vertex` in counterclockwise order around the surface normal.
/// For a boundary vertex the fan is open: the first neighbor follows the outgoing
/// boundary edge and the last precedes the incoming one.
std::vector<int> one_ring(const TriSurfaceMesh& mesh, int vertex);

}  // namespace stiffen
