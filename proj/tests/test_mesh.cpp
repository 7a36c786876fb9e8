#include "doctest.h"
#include "support/generators.hpp"

#include "stiffen/error.hpp"
#include "stiffen/mesh.hpp"

#include <cmath>
#include <set>

using namespace stiffen;

namespace {

TriSurfaceMesh torus(int nu, int nv, double R = 2.0, double r = 0.5)
{
    Eigen::MatrixX3d V(nu * nv, 3);
    for (int i = 0; i < nu; ++i)
        for (int j = 0; j < nv; ++j) {
            const double a = 2 * M_PI * i / nu, b = 2 * M_PI * j / nv;
            V.row(i * nv + j) << (R + r * std::cos(b)) * std::cos(a), (R + r * std::cos(b)) * std::sin(a), r * std::sin(b);
        }
    Eigen::MatrixX3i F(2 * nu * nv, 3);
    int f = 0;
    for (int i = 0; i < nu; ++i)
        for (int j = 0; j < nv; ++j) {
            const int a = i * nv + j, b = ((i + 1) % nu) * nv + j, c = i * nv + (j + 1) % nv, d = ((i + 1) % nu) * nv + (j + 1) % nv;
            F.row(f++) << a, b, d;
            F.row(f++) << a, d, c;
        }
    return TriSurfaceMesh(V, F);
}

void check_half_edges(const TriSurfaceMesh& m)
{
    for (int h = 0; h < static_cast<int>(m.half_edges().size()); ++h) {
        const auto& he = m.half_edge(h);
        REQUIRE(m.half_edge(m.half_edge(he.next).next).next == h);
        CHECK(m.half_edge(he.next).from == he.to);
        CHECK(he.face == h / 3);
        if (he.twin >= 0) {
            CHECK(m.half_edge(he.twin).twin == h);
            CHECK(m.half_edge(he.twin).from == he.to);
            CHECK(m.half_edge(he.twin).to == he.from);
            CHECK(m.half_edge(he.twin).edge == he.edge);
        }
        CHECK(m.find_half_edge(he.from, he.to) == h);
    }
}

}  // namespace

TEST_CASE("topology classes")
{
    const auto tet = classify_topology(testgen::tetrahedron());
    CHECK(tet.tag == TopologyTag::Closed);
    CHECK(tet.euler_characteristic == 2);
    CHECK(tet.genus == 0);

    const auto g = classify_topology(testgen::grid(4, 3));
    CHECK(g.tag == TopologyTag::SingleBoundary);
    CHECK(g.boundary_count == 1);
    CHECK(g.euler_characteristic == 1);

    const auto cyl = classify_topology(testgen::cylinder(12, 4, 1.0, 2.0));
    CHECK(cyl.tag == TopologyTag::MultiBoundary);
    CHECK(cyl.boundary_count == 2);
    CHECK(cyl.euler_characteristic == 0);
    CHECK(cyl.genus == 0);

    const auto t = classify_topology(torus(12, 8));
    CHECK(t.tag == TopologyTag::Closed);
    CHECK(t.euler_characteristic == 0);
    CHECK(t.genus == 1);

    CHECK(std::string(to_string(TopologyTag::MultiBoundary)).size() > 0);
}

TEST_CASE("Euler characteristic equals V - E + F")
{
    for (const auto& m : {testgen::grid(5, 2), testgen::disk(4, 10), testgen::sphere(6, 9), torus(9, 7),
                          testgen::cylinder(10, 3, 1, 1)}) {
        const auto t = classify_topology(m);
        CHECK(t.euler_characteristic == m.num_vertices() - m.num_edges() + m.num_faces());
        CHECK(t.genus == (2 - t.euler_characteristic - t.boundary_count) / 2);
        check_half_edges(m);
    }
}

TEST_CASE("boundary loops keep the surface on the left")
{
    const auto m = testgen::grid(3, 3);
    REQUIRE(m.boundary_loops().size() == 1);
    const auto& loop = m.boundary_loops()[0];
    CHECK(loop.size() == 12);
    for (std::size_t i = 0; i < loop.size(); ++i) {
        const int h = m.find_half_edge(loop[i], loop[(i + 1) % loop.size()]);
        REQUIRE(h >= 0);
        CHECK(m.half_edge(h).twin < 0);
    }
    // CCW grid: the outer loop has positive signed area in the plane.
    double area = 0.0;
    for (std::size_t i = 0; i < loop.size(); ++i) {
        const auto a = m.position(loop[i]), b = m.position(loop[(i + 1) % loop.size()]);
        area += a.x() * b.y() - a.y() * b.x();
    }
    CHECK(area > 0.0);
}

TEST_CASE("one-ring is counterclockwise")
{
    const auto m = testgen::grid(4, 4);
    const int v = 2 * 5 + 2;
    const auto ring = one_ring(m, v);
    CHECK(ring.size() == 6);
    const Eigen::Vector3d c = m.position(v);
    for (std::size_t i = 0; i < ring.size(); ++i) {
        const Eigen::Vector3d a = m.position(ring[i]) - c, b = m.position(ring[(i + 1) % ring.size()]) - c;
        CHECK(a.cross(b).z() > 0.0);
    }
    // Boundary vertex: open fan from the outgoing boundary edge.
    const auto corner = one_ring(m, 0);
    CHECK(corner.front() == 1);
    CHECK(corner.back() == 5);
    CHECK_THROWS_AS(one_ring(m, m.num_vertices()), ValidationError);
}

TEST_CASE("construction drops degenerate, duplicate and unreferenced input")
{
    Eigen::MatrixX3d V(6, 3);
    V << 0, 0, 0, 1, 0, 0, 1, 1, 0, 0, 1, 0, 2, 0, 0, 9, 9, 9;
    Eigen::MatrixX3i F(5, 3);
    F << 0, 1, 2,  //
        0, 2, 3,   //
        2, 0, 1,   // duplicate of the first, rotated
        0, 1, 4,   // collinear
        3, 2, 0;   // duplicate of the second with opposite winding
    MeshBuildReport rep;
    TriSurfaceMesh m(V, F, &rep);
    CHECK(m.num_faces() == 2);
    CHECK(rep.dropped_duplicate == 2);
    CHECK(rep.dropped_degenerate == 1);
    CHECK(rep.dropped_unreferenced == 2);
    CHECK(m.num_vertices() == 4);
    CHECK(rep.vertex_map[5] == -1);
    CHECK(m.total_area() == doctest::Approx(1.0));
}

TEST_CASE("inconsistent winding is repaired")
{
    Eigen::MatrixX3d V(4, 3);
    V << 0, 0, 0, 1, 0, 0, 1, 1, 0, 0, 1, 0;
    Eigen::MatrixX3i F(2, 3);
    F << 0, 1, 2, 0, 3, 2;  // second face wound the other way
    MeshBuildReport rep;
    TriSurfaceMesh m(V, F, &rep);
    CHECK(rep.reoriented == 1);
    CHECK(m.face_normal(0).dot(m.face_normal(1)) == doctest::Approx(1.0));
}

TEST_CASE("non-manifold and non-orientable input is rejected")
{
    Eigen::MatrixX3d V(5, 3);
    V << 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, -1, 0, 0, 0, 1;
    Eigen::MatrixX3i F(3, 3);
    F << 0, 1, 2, 1, 0, 3, 0, 1, 4;  // edge 0-1 shared by three faces
    CHECK_THROWS_AS(TriSurfaceMesh(V, F), MeshError);

    // Moebius strip.
    const int n = 12;
    Eigen::MatrixX3d W(2 * n, 3);
    for (int i = 0; i < n; ++i) {
        const double t = 2 * M_PI * i / n;
        for (int s = 0; s < 2; ++s) {
            const double off = (s ? 0.3 : -0.3);
            const double c = std::cos(t / 2) * off;
            W.row(2 * i + s) << (2 + c) * std::cos(t), (2 + c) * std::sin(t), std::sin(t / 2) * off;
        }
    }
    Eigen::MatrixX3i G(2 * n, 3);
    for (int i = 0; i < n; ++i) {
        int a = 2 * i, b = 2 * i + 1, c = 2 * ((i + 1) % n), d = 2 * ((i + 1) % n) + 1;
        if (i == n - 1) std::swap(c, d);
        G.row(2 * i) << a, c, d;
        G.row(2 * i + 1) << a, d, b;
    }
    CHECK_THROWS_AS(TriSurfaceMesh(W, G), MeshError);

    Eigen::MatrixX3i bad(1, 3);
    bad << 0, 1, 7;
    CHECK_THROWS_AS(TriSurfaceMesh(V, bad), MeshError);
}

TEST_CASE("geometry helpers")
{
    const auto s = testgen::sphere(16, 24);
    const auto N = s.vertex_normals();
    for (int v = 0; v < s.num_vertices(); ++v) {
        CHECK(N.row(v).norm() == doctest::Approx(1.0));
        CHECK(N.row(v).dot(s.vertices().row(v)) > 0.98);
    }
    CHECK(s.total_area() == doctest::Approx(4 * M_PI).epsilon(0.02));
    const auto g = testgen::grid(2, 2, 2.0, 1.0);
    CHECK(g.bounding_box().sizes().x() == doctest::Approx(2.0));
    CHECK(g.find_edge(0, 1) >= 0);
    CHECK(g.find_edge(0, 8) == -1);
}
