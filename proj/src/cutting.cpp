#include "stiffen/cutting.hpp"

#include "stiffen/error.hpp"
#include "stiffen/mesh_io.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>

namespace stiffen {

std::vector<int> SeamPath::vertices() const
{
    std::vector<int> out;
    if (edges.empty()) return out;
    int start = edges[0][0];
    if (edges.size() > 1) {
        const auto& e1 = edges[1];
        if (start == e1[0] || start == e1[1]) start = edges[0][1];
    }
    out.push_back(start);
    int cur = start;
    for (const auto& e : edges) {
        cur = e[0] == cur ? e[1] : e[0];
        out.push_back(cur);
    }
    return out;
}

void validate_seam(const TriSurfaceMesh& mesh, const SeamPath& seam)
{
    for (const auto& e : seam.edges) {
        if (e[0] < 0 || e[1] < 0 || e[0] >= mesh.num_vertices() || e[1] >= mesh.num_vertices() ||
            mesh.find_edge(e[0], e[1]) < 0) {
            std::ostringstream os;
            os << "seam edge (" << e[0] << ", " << e[1] << ") is not an edge of the mesh";
            throw ValidationError(os.str());
        }
    }
    if (seam.edges.empty()) return;
    const auto verts = seam.vertices();
    for (std::size_t i = 0; i < seam.edges.size(); ++i) {
        const auto& e = seam.edges[i];
        const int a = verts[i], b = verts[i + 1];
        if (!((e[0] == a && e[1] == b) || (e[0] == b && e[1] == a)))
            throw ValidationError("seam edges " + std::to_string(i - 1) + " and " + std::to_string(i) +
                                  " do not share a vertex");
    }
    const bool cycle = verts.front() == verts.back() && seam.edges.size() > 2;
    std::set<int> seen(verts.begin(), verts.end() - (cycle ? 1 : 0));
    if (seen.size() != verts.size() - (cycle ? 1 : 0))
        throw ValidationError("seam path is not simple (a vertex repeats)");
}

SubMesh cut_seam(const TriSurfaceMesh& mesh, const SeamPath& seam)
{
    validate_seam(mesh, seam);
    const auto before = classify_topology(mesh);

    std::vector<char> cut(static_cast<std::size_t>(mesh.num_edges()), 0);
    for (const auto& e : seam.edges) cut[static_cast<std::size_t>(mesh.find_edge(e[0], e[1]))] = 1;

    // Union face corners across every uncut interior edge; each resulting class of a
    // vertex's corners is one fan piece.
    const int ncorner = 3 * mesh.num_faces();
    std::vector<int> parent(static_cast<std::size_t>(ncorner));
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    };
    auto unite = [&](int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
    };
    for (int h = 0; h < ncorner; ++h) {
        const HalfEdge& he = mesh.half_edge(h);
        if (he.twin < 0 || he.twin < h || cut[static_cast<std::size_t>(he.edge)]) continue;
        const int t = he.twin;
        unite(h, mesh.half_edge(t).next);
        unite(he.next, t);
    }

    std::vector<std::vector<int>> corners_of(static_cast<std::size_t>(mesh.num_vertices()));
    for (int c = 0; c < ncorner; ++c) corners_of[static_cast<std::size_t>(mesh.half_edge(c).from)].push_back(c);

    SubMesh out;
    out.parent_vertex.resize(static_cast<std::size_t>(mesh.num_vertices()));
    std::iota(out.parent_vertex.begin(), out.parent_vertex.end(), 0);
    std::vector<int> corner_vertex(static_cast<std::size_t>(ncorner), -1);
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        std::map<int, int> root_to_id;  // roots ordered; the smallest root keeps v
        for (int c : corners_of[static_cast<std::size_t>(v)]) root_to_id.emplace(find(c), -1);
        bool first = true;
        for (auto& [root, id] : root_to_id) {
            if (first) {
                id = v;
                first = false;
            } else {
                id = static_cast<int>(out.parent_vertex.size());
                out.parent_vertex.push_back(v);
            }
        }
        for (int c : corners_of[static_cast<std::size_t>(v)]) corner_vertex[static_cast<std::size_t>(c)] = root_to_id[find(c)];
    }

    Eigen::MatrixX3d V(static_cast<Eigen::Index>(out.parent_vertex.size()), 3);
    for (std::size_t i = 0; i < out.parent_vertex.size(); ++i)
        V.row(static_cast<Eigen::Index>(i)) = mesh.vertices().row(out.parent_vertex[i]);
    Eigen::MatrixX3i F(mesh.num_faces(), 3);
    for (int f = 0; f < mesh.num_faces(); ++f)
        for (int k = 0; k < 3; ++k) F(f, k) = corner_vertex[static_cast<std::size_t>(3 * f + k)];
    out.mesh = TriSurfaceMesh(std::move(V), std::move(F));
    out.parent_face.resize(static_cast<std::size_t>(mesh.num_faces()));
    std::iota(out.parent_face.begin(), out.parent_face.end(), 0);

    const auto after = classify_topology(out.mesh);
    if (before.tag == TopologyTag::Closed && after.tag == TopologyTag::Closed) {
        std::ostringstream os;
        os << "seam leaves the mesh closed (boundary loops " << after.boundary_count << ", Euler characteristic "
           << after.euler_characteristic << ", genus " << after.genus << ")";
        throw TopologyError(os.str());
    }
    return out;
}

namespace {

struct ShortestPaths {
    std::vector<double> dist;
    std::vector<int> pred;
};

/// Dijkstra over mesh edges. `expand(v)` decides whether paths may continue through v;
/// `usable(a, b)` filters edges.
ShortestPaths dijkstra(const TriSurfaceMesh& mesh, std::span<const int> sources,
                       const std::function<bool(int)>& expand,
                       const std::function<bool(int, int)>& usable)
{
    const auto n = static_cast<std::size_t>(mesh.num_vertices());
    ShortestPaths sp{std::vector<double>(n, std::numeric_limits<double>::infinity()), std::vector<int>(n, -1)};
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    for (int s : sources) {
        sp.dist[static_cast<std::size_t>(s)] = 0.0;
        queue.emplace(0.0, s);
    }
    std::vector<char> done(n, 0);
    while (!queue.empty()) {
        const auto [d, v] = queue.top();
        queue.pop();
        if (done[static_cast<std::size_t>(v)]) continue;
        done[static_cast<std::size_t>(v)] = 1;
        if (d > 0.0 && !expand(v)) continue;
        for (int w : one_ring(mesh, v)) {
            if (!usable(v, w)) continue;
            const double nd = d + (mesh.position(w) - mesh.position(v)).norm();
            auto& dw = sp.dist[static_cast<std::size_t>(w)];
            if (nd < dw || (nd == dw && v < sp.pred[static_cast<std::size_t>(w)])) {
                dw = nd;
                sp.pred[static_cast<std::size_t>(w)] = v;
                queue.emplace(nd, w);
            }
        }
    }
    return sp;
}

int argmax_lowest(const std::vector<double>& values)
{
    int best = 0;
    for (int i = 1; i < static_cast<int>(values.size()); ++i)
        if (std::isfinite(values[static_cast<std::size_t>(i)]) &&
            values[static_cast<std::size_t>(i)] > values[static_cast<std::size_t>(best)])
            best = i;
    return best;
}

SeamPath path_to(const ShortestPaths& sp, int target)
{
    SeamPath seam;
    seam.source = SeamSource::Auto;
    int cur = target;
    while (sp.pred[static_cast<std::size_t>(cur)] >= 0) {
        const int p = sp.pred[static_cast<std::size_t>(cur)];
        seam.edges.push_back({p, cur});
        cur = p;
    }
    std::reverse(seam.edges.begin(), seam.edges.end());
    return seam;
}

std::array<int, 2> farthest_pair(const TriSurfaceMesh& mesh, ShortestPaths* from_first)
{
    auto any = [](int) { return true; };
    auto all = [](int, int) { return true; };
    const int start = 0;
    const auto first = dijkstra(mesh, std::span<const int>(&start, 1), any, all);
    const int a = argmax_lowest(first.dist);
    auto second = dijkstra(mesh, std::span<const int>(&a, 1), any, all);
    const int b = argmax_lowest(second.dist);
    if (from_first) *from_first = std::move(second);
    return {a, b};
}

double loop_length(const TriSurfaceMesh& mesh, const std::vector<int>& loop)
{
    double len = 0.0;
    for (std::size_t i = 0; i < loop.size(); ++i)
        len += (mesh.position(loop[(i + 1) % loop.size()]) - mesh.position(loop[i])).norm();
    return len;
}

}  // namespace

std::vector<double> edge_distances(const TriSurfaceMesh& mesh, std::span<const int> sources)
{
    return dijkstra(mesh, sources, [](int) { return true; }, [](int, int) { return true; }).dist;
}

std::optional<SeamPath> auto_seam(const TriSurfaceMesh& mesh)
{
    const auto topo = classify_topology(mesh);
    if (topo.tag == TopologyTag::SingleBoundary) return std::nullopt;
    if (topo.tag == TopologyTag::Closed) {
        ShortestPaths sp;
        const auto [a, b] = farthest_pair(mesh, &sp);
        auto seam = path_to(sp, b);
        if (seam.edges.size() == 1) {
            // One edge cannot open a closed surface: continue to the neighbor of b
            // farthest from a.
            int next = -1;
            for (int w : one_ring(mesh, b))
                if (w != a && (next < 0 || sp.dist[static_cast<std::size_t>(w)] > sp.dist[static_cast<std::size_t>(next)] ||
                               (sp.dist[static_cast<std::size_t>(w)] == sp.dist[static_cast<std::size_t>(next)] && w < next)))
                    next = w;
            seam.edges.push_back({b, next});
        }
        return seam;
    }
    // Two longest boundary loops.
    const auto& loops = mesh.boundary_loops();
    std::vector<int> order(loops.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int i, int j) {
        return loop_length(mesh, loops[static_cast<std::size_t>(i)]) > loop_length(mesh, loops[static_cast<std::size_t>(j)]);
    });
    const auto& from = loops[static_cast<std::size_t>(order[0])];
    std::set<int> target(loops[static_cast<std::size_t>(order[1])].begin(), loops[static_cast<std::size_t>(order[1])].end());
    std::vector<int> sources(from.begin(), from.end());
    std::sort(sources.begin(), sources.end());
    const auto sp = dijkstra(
        mesh, sources, [&](int v) { return !mesh.is_boundary_vertex(v); },
        [&](int a, int b) {
            const int h = mesh.find_half_edge(a, b) >= 0 ? mesh.find_half_edge(a, b) : mesh.find_half_edge(b, a);
            return mesh.half_edge(h).twin >= 0;
        });
    int best = -1;
    for (int v : target)
        if (std::isfinite(sp.dist[static_cast<std::size_t>(v)]) &&
            (best < 0 || sp.dist[static_cast<std::size_t>(v)] < sp.dist[static_cast<std::size_t>(best)]))
            best = v;
    if (best < 0) throw TopologyError("no interior edge path joins the two longest boundary loops");
    return path_to(sp, best);
}

int ChartAssignment::chart_count() const
{
    return face_chart.empty() ? 0 : *std::max_element(face_chart.begin(), face_chart.end()) + 1;
}

std::vector<SubMesh> segment_charts(const TriSurfaceMesh& mesh, const ChartAssignment& assignment)
{
    if (static_cast<int>(assignment.face_chart.size()) != mesh.num_faces())
        throw ValidationError("chart assignment needs one entry per triangle");
    for (int c : assignment.face_chart)
        if (c < 0) throw ValidationError("negative chart index");
    const int K = assignment.chart_count();
    std::vector<std::vector<int>> faces(static_cast<std::size_t>(K));
    for (int f = 0; f < mesh.num_faces(); ++f) faces[static_cast<std::size_t>(assignment.face_chart[static_cast<std::size_t>(f)])].push_back(f);

    std::vector<SubMesh> out;
    for (int c = 0; c < K; ++c) {
        const auto& fs = faces[static_cast<std::size_t>(c)];
        if (fs.empty()) throw ValidationError("chart " + std::to_string(c) + " is empty");
        // Edge connectivity inside the chart.
        std::set<int> members(fs.begin(), fs.end());
        std::set<int> reached{fs.front()};
        std::queue<int> queue;
        queue.push(fs.front());
        while (!queue.empty()) {
            const int f = queue.front();
            queue.pop();
            for (int k = 0; k < 3; ++k) {
                const int t = mesh.half_edge(3 * f + k).twin;
                if (t < 0) continue;
                const int g = mesh.half_edge(t).face;
                if (members.count(g) && reached.insert(g).second) queue.push(g);
            }
        }
        if (reached.size() != fs.size())
            throw ValidationError("chart " + std::to_string(c) + " is not edge-connected");

        std::vector<int> used;
        for (int f : fs)
            for (int k = 0; k < 3; ++k) used.push_back(mesh.corner(f, k));
        std::sort(used.begin(), used.end());
        used.erase(std::unique(used.begin(), used.end()), used.end());
        std::map<int, int> local;
        for (std::size_t i = 0; i < used.size(); ++i) local[used[i]] = static_cast<int>(i);
        Eigen::MatrixX3d V(static_cast<Eigen::Index>(used.size()), 3);
        for (std::size_t i = 0; i < used.size(); ++i) V.row(static_cast<Eigen::Index>(i)) = mesh.vertices().row(used[i]);
        Eigen::MatrixX3i F(static_cast<Eigen::Index>(fs.size()), 3);
        for (std::size_t i = 0; i < fs.size(); ++i)
            for (int k = 0; k < 3; ++k) F(static_cast<Eigen::Index>(i), k) = local[mesh.corner(fs[i], k)];
        SubMesh sub;
        sub.mesh = TriSurfaceMesh(std::move(V), std::move(F));
        sub.parent_vertex = used;
        sub.parent_face = fs;
        out.push_back(std::move(sub));
    }
    return out;
}

ChartAssignment split_two_way(const TriSurfaceMesh& mesh)
{
    const auto [a, b] = farthest_pair(mesh, nullptr);
    const auto da = edge_distances(mesh, std::span<const int>(&a, 1));
    const auto db = edge_distances(mesh, std::span<const int>(&b, 1));
    ChartAssignment out;
    out.face_chart.resize(static_cast<std::size_t>(mesh.num_faces()));
    for (int f = 0; f < mesh.num_faces(); ++f) {
        double sa = 0.0, sb = 0.0;
        for (int k = 0; k < 3; ++k) {
            sa += da[static_cast<std::size_t>(mesh.corner(f, k))];
            sb += db[static_cast<std::size_t>(mesh.corner(f, k))];
        }
        out.face_chart[static_cast<std::size_t>(f)] = sa <= sb ? 0 : 1;
    }
    // Keep the largest edge-connected component of each label; hand the rest to the other.
    for (int pass = 0; pass < 4; ++pass) {
        bool changed = false;
        for (int label = 0; label < 2; ++label) {
            std::vector<int> comp(static_cast<std::size_t>(mesh.num_faces()), -1);
            std::vector<int> sizes;
            for (int f = 0; f < mesh.num_faces(); ++f) {
                if (out.face_chart[static_cast<std::size_t>(f)] != label || comp[static_cast<std::size_t>(f)] >= 0) continue;
                const int id = static_cast<int>(sizes.size());
                sizes.push_back(0);
                std::queue<int> queue;
                queue.push(f);
                comp[static_cast<std::size_t>(f)] = id;
                while (!queue.empty()) {
                    const int g = queue.front();
                    queue.pop();
                    ++sizes.back();
                    for (int k = 0; k < 3; ++k) {
                        const int t = mesh.half_edge(3 * g + k).twin;
                        if (t < 0) continue;
                        const int nb = mesh.half_edge(t).face;
                        if (out.face_chart[static_cast<std::size_t>(nb)] == label && comp[static_cast<std::size_t>(nb)] < 0) {
                            comp[static_cast<std::size_t>(nb)] = id;
                            queue.push(nb);
                        }
                    }
                }
            }
            if (sizes.size() <= 1) continue;
            const int keep = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
            for (int f = 0; f < mesh.num_faces(); ++f)
                if (comp[static_cast<std::size_t>(f)] >= 0 && comp[static_cast<std::size_t>(f)] != keep) {
                    out.face_chart[static_cast<std::size_t>(f)] = 1 - label;
                    changed = true;
                }
        }
        if (!changed) break;
    }
    return out;
}

SeamPath read_seam_file(const std::filesystem::path& path)
{
    std::istringstream in(read_file(path));
    SeamPath seam;
    seam.source = SeamSource::User;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        int a = 0, b = 0;
        if (!(ls >> a)) continue;
        if (!(ls >> b)) throw IoError("seam file line " + std::to_string(line_no) + ": expected 'v_a v_b'");
        seam.edges.push_back({a, b});
    }
    return seam;
}

void write_seam_file(const std::filesystem::path& path, const SeamPath& seam)
{
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& e : seam.edges) out << e[0] << ' ' << e[1] << '\n';
}

ChartAssignment read_chart_file(const std::filesystem::path& path)
{
    std::istringstream in(read_file(path));
    ChartAssignment out;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        int c = 0;
        if (ls >> c) out.face_chart.push_back(c);
    }
    return out;
}

void write_chart_file(const std::filesystem::path& path, const ChartAssignment& assignment)
{
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    for (int c : assignment.face_chart) out << c << '\n';
}

}  // namespace stiffen
