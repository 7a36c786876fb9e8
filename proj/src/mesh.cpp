#include "stiffen/mesh.hpp"

#include "stiffen/error.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <set>
#include <sstream>

namespace stiffen {

namespace {

std::uint64_t edge_key(int a, int b)
{
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
}

}  // namespace

const char* to_string(TopologyTag tag)
{
    switch (tag) {
        case TopologyTag::Closed: return "Closed";
        case TopologyTag::SingleBoundary: return "SingleBoundary";
        case TopologyTag::MultiBoundary: return "MultiBoundary";
    }
    return "?";
}

TriSurfaceMesh::TriSurfaceMesh(Eigen::MatrixX3d vertices, Eigen::MatrixX3i triangles,
                               MeshBuildReport* report)
{
    MeshBuildReport local;
    MeshBuildReport& rep = report ? *report : local;
    rep = MeshBuildReport{};

    const int nv = static_cast<int>(vertices.rows());
    const int nf_in = static_cast<int>(triangles.rows());
    if (nv == 0 || nf_in == 0) throw MeshError("empty mesh");

    for (int f = 0; f < nf_in; ++f) {
        for (int k = 0; k < 3; ++k) {
            const int v = triangles(f, k);
            if (v < 0 || v >= nv) {
                std::ostringstream os;
                os << "triangle " << f << " references vertex " << v << " out of range [0, "
                   << nv << ")";
                throw MeshError(os.str());
            }
        }
    }

    Eigen::AlignedBox3d box;
    for (int v = 0; v < nv; ++v) box.extend(vertices.row(v).transpose());
    const double area_floor = 1e-12 * box.sizes().squaredNorm();

    // Drop repeated-index, zero-area and duplicate triangles.
    std::vector<int> kept;
    kept.reserve(static_cast<std::size_t>(nf_in));
    std::set<std::array<int, 3>> seen;
    for (int f = 0; f < nf_in; ++f) {
        const int a = triangles(f, 0), b = triangles(f, 1), c = triangles(f, 2);
        const Eigen::Vector3d pa = vertices.row(a), pb = vertices.row(b), pc = vertices.row(c);
        const double area = 0.5 * (pb - pa).cross(pc - pa).norm();
        if (a == b || b == c || a == c || !(area >= area_floor)) {
            ++rep.dropped_degenerate;
            continue;
        }
        std::array<int, 3> key{a, b, c};
        std::sort(key.begin(), key.end());
        if (!seen.insert(key).second) {
            ++rep.dropped_duplicate;
            continue;
        }
        kept.push_back(f);
    }
    if (kept.empty()) throw MeshError("empty mesh: every triangle is degenerate");
    if (rep.dropped_degenerate > 0)
        rep.warnings.push_back("dropped " + std::to_string(rep.dropped_degenerate) +
                               " degenerate triangle(s)");
    if (rep.dropped_duplicate > 0)
        rep.warnings.push_back("dropped " + std::to_string(rep.dropped_duplicate) +
                               " duplicate triangle(s)");

    // Compact vertices.
    rep.vertex_map.assign(static_cast<std::size_t>(nv), -1);
    for (int f : kept)
        for (int k = 0; k < 3; ++k) rep.vertex_map[static_cast<std::size_t>(triangles(f, k))] = 0;
    int next_id = 0;
    for (auto& m : rep.vertex_map) {
        if (m == 0) m = next_id++;
        else ++rep.dropped_unreferenced;
    }
    if (rep.dropped_unreferenced > 0)
        rep.warnings.push_back("dropped " + std::to_string(rep.dropped_unreferenced) +
                               " unreferenced vertex(es)");

    vertices_.resize(next_id, 3);
    for (int v = 0; v < nv; ++v)
        if (rep.vertex_map[static_cast<std::size_t>(v)] >= 0)
            vertices_.row(rep.vertex_map[static_cast<std::size_t>(v)]) = vertices.row(v);
    triangles_.resize(static_cast<Eigen::Index>(kept.size()), 3);
    rep.face_map = kept;
    for (std::size_t i = 0; i < kept.size(); ++i)
        for (int k = 0; k < 3; ++k)
            triangles_(static_cast<Eigen::Index>(i), k) =
                rep.vertex_map[static_cast<std::size_t>(triangles(kept[i], k))];

    // Undirected edge -> incident faces; reject non-manifold edges.
    const int nf = num_faces();
    std::map<std::pair<int, int>, std::vector<int>> edge_faces;
    for (int f = 0; f < nf; ++f) {
        for (int k = 0; k < 3; ++k) {
            int a = triangles_(f, k), b = triangles_(f, (k + 1) % 3);
            if (a > b) std::swap(a, b);
            auto& faces = edge_faces[{a, b}];
            faces.push_back(f);
            if (faces.size() > 2) {
                std::ostringstream os;
                os << "non-manifold edge (" << a << ", " << b << ") shared by " << faces.size()
                   << "+ triangles";
                throw MeshError(os.str());
            }
        }
    }

    // Propagate a consistent orientation by breadth-first search over faces.
    auto has_directed = [&](int f, int a, int b) {
        for (int k = 0; k < 3; ++k)
            if (triangles_(f, k) == a && triangles_(f, (k + 1) % 3) == b) return true;
        return false;
    };
    std::vector<int> state(static_cast<std::size_t>(nf), -1);  // -1 unvisited, 0 kept, 1 flipped
    for (int seed = 0; seed < nf; ++seed) {
        if (state[static_cast<std::size_t>(seed)] >= 0) continue;
        state[static_cast<std::size_t>(seed)] = 0;
        std::queue<int> queue;
        queue.push(seed);
        while (!queue.empty()) {
            const int f = queue.front();
            queue.pop();
            for (int k = 0; k < 3; ++k) {
                const int a = triangles_(f, k), b = triangles_(f, (k + 1) % 3);
                const auto& faces = edge_faces[{std::min(a, b), std::max(a, b)}];
                for (int g : faces) {
                    if (g == f) continue;
                    // Neighbor must traverse the shared edge b -> a.
                    const bool consistent = has_directed(g, b, a);
                    if (state[static_cast<std::size_t>(g)] < 0) {
                        if (!consistent) {
                            std::swap(triangles_(g, 1), triangles_(g, 2));
                            state[static_cast<std::size_t>(g)] = 1;
                            ++rep.reoriented;
                        } else {
                            state[static_cast<std::size_t>(g)] = 0;
                        }
                        queue.push(g);
                    } else if (!consistent) {
                        std::ostringstream os;
                        os << "non-orientable surface at edge (" << a << ", " << b << ")";
                        throw MeshError(os.str());
                    }
                }
            }
        }
    }
    if (rep.reoriented > 0)
        rep.warnings.push_back("reoriented " + std::to_string(rep.reoriented) + " triangle(s)");

    build_connectivity();
}

void TriSurfaceMesh::build_connectivity()
{
    const int nf = num_faces();
    const int nv = num_vertices();
    half_edges_.assign(static_cast<std::size_t>(3 * nf), HalfEdge{});
    directed_.clear();
    directed_.reserve(static_cast<std::size_t>(3 * nf));
    for (int f = 0; f < nf; ++f) {
        for (int k = 0; k < 3; ++k) {
            const int h = 3 * f + k;
            HalfEdge& he = half_edges_[static_cast<std::size_t>(h)];
            he.from = triangles_(f, k);
            he.to = triangles_(f, (k + 1) % 3);
            he.next = 3 * f + (k + 1) % 3;
            he.face = f;
            if (!directed_.emplace(edge_key(he.from, he.to), h).second) {
                std::ostringstream os;
                os << "inconsistent orientation or non-manifold edge (" << he.from << ", "
                   << he.to << ")";
                throw MeshError(os.str());
            }
        }
    }
    std::vector<std::array<int, 2>> edges;
    for (auto& he : half_edges_) {
        auto it = directed_.find(edge_key(he.to, he.from));
        if (it != directed_.end()) he.twin = it->second;
        if (he.twin < 0 || he.from < he.to) edges.push_back({std::min(he.from, he.to),
                                                             std::max(he.from, he.to)});
    }
    std::sort(edges.begin(), edges.end());
    edges_ = std::move(edges);
    for (auto& he : half_edges_) {
        const std::array<int, 2> key{std::min(he.from, he.to), std::max(he.from, he.to)};
        he.edge = static_cast<int>(std::lower_bound(edges_.begin(), edges_.end(), key) -
                                   edges_.begin());
    }

    // Outgoing half-edge per vertex, preferring the boundary one; detect non-manifold vertices.
    outgoing_.assign(static_cast<std::size_t>(nv), -1);
    std::vector<int> out_count(static_cast<std::size_t>(nv), 0);
    std::vector<int> boundary_out(static_cast<std::size_t>(nv), 0);
    for (int h = 0; h < 3 * nf; ++h) {
        const HalfEdge& he = half_edges_[static_cast<std::size_t>(h)];
        auto v = static_cast<std::size_t>(he.from);
        ++out_count[v];
        if (he.twin < 0) {
            ++boundary_out[v];
            outgoing_[v] = h;
        } else if (outgoing_[v] < 0) {
            outgoing_[v] = h;
        }
    }
    for (int v = 0; v < nv; ++v) {
        if (boundary_out[static_cast<std::size_t>(v)] > 1)
            throw MeshError("non-manifold vertex " + std::to_string(v) +
                            " (several boundary fans)");
        // A single fan must reach every outgoing half-edge.
        int count = 0;
        const int start = outgoing_[static_cast<std::size_t>(v)];
        int h = start;
        do {
            ++count;
            const int t = half_edges_[static_cast<std::size_t>(prev(h))].twin;
            if (t < 0) break;
            h = t;
        } while (h != start && count <= out_count[static_cast<std::size_t>(v)]);
        if (count != out_count[static_cast<std::size_t>(v)])
            throw MeshError("non-manifold vertex " + std::to_string(v) +
                            " (disconnected triangle fans)");
    }

    // Boundary loops, following boundary half-edges (surface on the left).
    boundary_loops_.clear();
    std::vector<char> visited(half_edges_.size(), 0);
    for (int h = 0; h < 3 * nf; ++h) {
        if (half_edges_[static_cast<std::size_t>(h)].twin >= 0 || visited[static_cast<std::size_t>(h)])
            continue;
        std::vector<int> loop;
        int cur = h;
        while (!visited[static_cast<std::size_t>(cur)]) {
            visited[static_cast<std::size_t>(cur)] = 1;
            const HalfEdge& he = half_edges_[static_cast<std::size_t>(cur)];
            loop.push_back(he.from);
            cur = outgoing_[static_cast<std::size_t>(he.to)];
        }
        boundary_loops_.push_back(std::move(loop));
    }
}

int TriSurfaceMesh::find_half_edge(int a, int b) const
{
    auto it = directed_.find(edge_key(a, b));
    return it == directed_.end() ? -1 : it->second;
}

int TriSurfaceMesh::find_edge(int a, int b) const
{
    int h = find_half_edge(a, b);
    if (h < 0) h = find_half_edge(b, a);
    return h < 0 ? -1 : half_edge(h).edge;
}

double TriSurfaceMesh::face_area(int f) const
{
    const Eigen::Vector3d a = position(corner(f, 0)), b = position(corner(f, 1)),
                          c = position(corner(f, 2));
    return 0.5 * (b - a).cross(c - a).norm();
}

Eigen::Vector3d TriSurfaceMesh::face_normal(int f) const
{
    const Eigen::Vector3d a = position(corner(f, 0)), b = position(corner(f, 1)),
                          c = position(corner(f, 2));
    return (b - a).cross(c - a).normalized();
}

double TriSurfaceMesh::total_area() const
{
    double sum = 0.0;
    for (int f = 0; f < num_faces(); ++f) sum += face_area(f);
    return sum;
}

Eigen::MatrixX3d TriSurfaceMesh::vertex_normals() const
{
    Eigen::MatrixX3d normals = Eigen::MatrixX3d::Zero(num_vertices(), 3);
    for (int f = 0; f < num_faces(); ++f) {
        const Eigen::Vector3d a = position(corner(f, 0)), b = position(corner(f, 1)),
                              c = position(corner(f, 2));
        const Eigen::RowVector3d weighted = (b - a).cross(c - a).transpose();  // 2 * area * n
        for (int k = 0; k < 3; ++k) normals.row(corner(f, k)) += weighted;
    }
    normals.rowwise().normalize();
    return normals;
}

Eigen::AlignedBox3d TriSurfaceMesh::bounding_box() const
{
    Eigen::AlignedBox3d box;
    for (int v = 0; v < num_vertices(); ++v) box.extend(position(v));
    return box;
}

double TriSurfaceMesh::mean_edge_length() const
{
    double sum = 0.0;
    for (const auto& e : edges_) sum += (position(e[0]) - position(e[1])).norm();
    return edges_.empty() ? 0.0 : sum / static_cast<double>(edges_.size());
}

TopologyClass classify_topology(const TriSurfaceMesh& mesh)
{
    TopologyClass topo;
    topo.boundary_count = static_cast<int>(mesh.boundary_loops().size());
    topo.euler_characteristic = mesh.num_vertices() - mesh.num_edges() + mesh.num_faces();
    topo.genus = (2 - topo.euler_characteristic - topo.boundary_count) / 2;
    if (topo.boundary_count == 0) topo.tag = TopologyTag::Closed;
    else if (topo.boundary_count == 1) topo.tag = TopologyTag::SingleBoundary;
    else topo.tag = TopologyTag::MultiBoundary;
    return topo;
}

std::vector<int> one_ring(const TriSurfaceMesh& mesh, int vertex)
{
    if (vertex < 0 || vertex >= mesh.num_vertices())
        throw ValidationError("vertex index " + std::to_string(vertex) + " out of range");
    std::vector<int> ring;
    const int start = mesh.outgoing(vertex);
    int h = start;
    while (true) {
        ring.push_back(mesh.half_edge(h).to);
        const int p = mesh.prev(h);
        const int t = mesh.half_edge(p).twin;
        if (t < 0) {
            ring.push_back(mesh.half_edge(p).from);  // open fan: close with the last neighbor
            break;
        }
        h = t;
        if (h == start) break;
    }
    return ring;
}

}  // namespace stiffen
