#include "doctest.h"
#include "support/generators.hpp"

#include "stiffen/bspline.hpp"
#include "stiffen/error.hpp"
#include "stiffen/prism_fea.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <random>

using namespace stiffen;

namespace {

PrismModel plate(int nx, int ny, double w, double h, int layers, double H, double skin)
{
    const auto g = testgen::grid(nx, ny, w, h, true);
    return extrude_prisms(g, ChartAtlas::single(g, testgen::xy(g) / std::max(w, h)), layers, H, skin,
                          OffsetDirection::AlongNormal, 1000.0, 0.3);
}

/// Cantilever plate: clamped at x = 0, downward load on the x = w edge.
PrismModel cantilever(int nx = 4, int ny = 2, int layers = 2)
{
    auto m = plate(nx, ny, 4.0, 1.0, layers, 0.5, 0.1);
    const Box fix{Eigen::Vector3d(-1e-9, -1, -1), Eigen::Vector3d(1e-9, 2, 2)};
    apply_constraints(m, std::span<const Box>(&fix, 1));
    const LoadSpec load{Box{Eigen::Vector3d(4 - 1e-9, -1, -1), Eigen::Vector3d(4 + 1e-9, 2, 2)}, Eigen::Vector3d(0, 0, -1)};
    apply_loads(m, std::span<const LoadSpec>(&load, 1));
    return m;
}

/// Dense global stiffness with unit density everywhere.
Eigen::MatrixXd dense_stiffness(const PrismModel& m)
{
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(m.num_dofs(), m.num_dofs());
    for (std::size_t e = 0; e < m.elements.size(); ++e)
        for (int a = 0; a < 6; ++a)
            for (int b = 0; b < 6; ++b)
                K.block<3, 3>(3 * m.elements[e].nodes[static_cast<std::size_t>(a)],
                              3 * m.elements[e].nodes[static_cast<std::size_t>(b)]) += m.ke[e].block<3, 3>(3 * a, 3 * b);
    return K;
}

Eigen::Matrix<double, 6, 3> right_prism(double t)
{
    Eigen::Matrix<double, 6, 3> X;
    X << 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, t, 1, 0, t, 0, 1, t;
    return X;
}

}  // namespace

TEST_CASE("extrusion counts, levels and volumes")
{
    const auto g = testgen::grid(1, 1);
    const auto m = extrude_prisms(g, ChartAtlas::single(g, testgen::xy(g)), 3, 0.5, 0.1, OffsetDirection::AlongNormal,
                                  2.1e5, 0.3);
    CHECK(m.elements.size() == 8);
    CHECK(m.levels == std::vector<double>{-0.1, 0.0, 0.5 / 3, 1.0 / 3, 0.5});
    CHECK(m.surface_level == 1);
    CHECK(m.nodes.rows() == 5 * 4);
    std::vector<double> mids;
    int skin = 0;
    for (const auto& e : m.elements) {
        if (e.is_skin) {
            ++skin;
            CHECK(e.layer == -1);
            continue;
        }
        mids.push_back(e.layer_mid);
        CHECK(e.layer_mid == doctest::Approx((2 * e.layer + 1) * 0.5 / 6).epsilon(1e-14));
        CHECK(e.volume > 0.0);
    }
    CHECK(skin == 2);
    std::sort(mids.begin(), mids.end());
    mids.erase(std::unique(mids.begin(), mids.end(), [](double a, double b) { return std::abs(a - b) < 1e-14; }), mids.end());
    REQUIRE(mids.size() == 3);
    CHECK(mids[0] == doctest::Approx(1.0 / 12));
    CHECK(mids[1] == doctest::Approx(3.0 / 12));
    CHECK(mids[2] == doctest::Approx(5.0 / 12));
    CHECK(m.design_volume() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(m.total_volume() == doctest::Approx(0.6).epsilon(1e-12));

    // Consecutive levels of the same triangle.
    for (const auto& e : m.elements)
        for (int i = 0; i < 3; ++i) {
            const int b = e.nodes[static_cast<std::size_t>(i)], t = e.nodes[static_cast<std::size_t>(i + 3)];
            CHECK(t - b == m.surface_vertices);
            CHECK(b % m.surface_vertices == g.corner(e.face, i));
        }

    const auto bare = extrude_prisms(g, ChartAtlas::single(g, testgen::xy(g)), 3, 0.5, 0.0, OffsetDirection::AlongNormal,
                                     2.1e5, 0.3);
    CHECK(bare.elements.size() == 6);
    CHECK(bare.surface_level == 0);

    const auto inward = extrude_prisms(g, ChartAtlas::single(g, testgen::xy(g)), 2, 0.5, 0.1,
                                       OffsetDirection::AgainstNormal, 2.1e5, 0.3);
    for (const auto& e : inward.elements) CHECK(e.volume > 0.0);
    CHECK(inward.nodes(inward.nodes.rows() - 1, 2) == doctest::Approx(-0.5));

    CHECK(wedge_volume(right_prism(0.7)) == doctest::Approx(0.35).epsilon(1e-14));

    const auto p = plate(5, 3, 2.5, 1.5, 3, 0.4, 0.05);
    CHECK(p.design_volume() == doctest::Approx(2.5 * 1.5 * 0.4).epsilon(1e-12));
    CHECK(p.total_volume() == doctest::Approx(2.5 * 1.5 * 0.45).epsilon(1e-12));
}

TEST_CASE("extrusion of a curved tube")
{
    const auto cyl = testgen::cylinder(32, 6, 12.0, 30.0);
    Eigen::MatrixX2d uv = Eigen::MatrixX2d::Zero(cyl.num_vertices(), 2);
    const auto m = extrude_prisms(cyl, ChartAtlas::single(cyl, uv), 3, 0.5, 0.1, OffsetDirection::AlongNormal, 2.1e5, 0.3);
    CHECK(m.elements.size() == static_cast<std::size_t>(cyl.num_faces()) * 4);
    // Outermost nodes sit H along the (nearly radial) vertex normals.
    const auto top = static_cast<Eigen::Index>(m.levels.size() - 1) * cyl.num_vertices();
    for (int v = 0; v < cyl.num_vertices(); ++v) {
        CHECK((m.nodes.row(top + v) - cyl.vertices().row(v)).norm() == doctest::Approx(0.5).epsilon(1e-14));
        CHECK(m.nodes.row(top + v).head<2>().norm() == doctest::Approx(12.5).epsilon(1e-4));
    }
    // Too thick for the curvature: offsets cross the axis and invert.
    CHECK_THROWS_AS(extrude_prisms(cyl, ChartAtlas::single(cyl, uv), 2, 30.0, 0.0, OffsetDirection::AgainstNormal, 1, 0.3),
                    MeshError);
}

TEST_CASE("wedge stiffness: symmetry, rigid modes, translation")
{
    std::mt19937 rng(4);
    std::uniform_real_distribution<double> u(-0.2, 0.2);
    for (int t = 0; t < 10; ++t) {
        Eigen::Matrix<double, 6, 3> X = right_prism(0.5 + std::abs(u(rng)));
        if (t > 0) X += Eigen::Matrix<double, 6, 3>::NullaryExpr([&](Eigen::Index, Eigen::Index) { return u(rng); });
        const auto K = wedge_stiffness(X, 2.1e5, 0.3);
        CHECK((K - K.transpose()).cwiseAbs().maxCoeff() == 0.0);
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 18, 18>> eig(K);
        const double lmax = eig.eigenvalues().maxCoeff();
        int zero = 0;
        for (int i = 0; i < 18; ++i) {
            CHECK(eig.eigenvalues()[i] > -1e-9 * lmax);
            if (std::abs(eig.eigenvalues()[i]) < 1e-9 * lmax) ++zero;
        }
        CHECK(zero == 6);
        for (int d = 0; d < 3; ++d) {
            Eigen::Matrix<double, 18, 1> tr = Eigen::Matrix<double, 18, 1>::Zero();
            for (int n = 0; n < 6; ++n) tr[3 * n + d] = 1.0;
            CHECK((K * tr).cwiseAbs().maxCoeff() < 1e-9 * lmax);
        }
    }
    Eigen::Matrix<double, 6, 3> bad = right_prism(0.5);
    bad.row(3).swap(bad.row(0));
    CHECK_THROWS_AS(wedge_stiffness(bad, 1.0, 0.3), MeshError);

    const auto N = wedge_shape(0.2, 0.3, 0.4);
    CHECK(N.sum() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(wedge_shape_gradients(0.2, 0.3, 0.4).rowwise().sum().cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("assembled model has six rigid modes")
{
    const auto m = plate(2, 2, 1.0, 1.0, 2, 0.3, 0.1);
    const auto K = dense_stiffness(m);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K);
    const double lmax = eig.eigenvalues().maxCoeff();
    int zero = 0;
    for (int i = 0; i < eig.eigenvalues().size(); ++i)
        if (std::abs(eig.eigenvalues()[i]) < 1e-9 * lmax) ++zero;
    CHECK(zero == 6);
}

TEST_CASE("patch test: linear displacement gives constant stress")
{
    auto m = plate(3, 3, 1.0, 1.0, 3, 0.6, 0.0);
    const double E = m.E, nu = m.nu;
    Eigen::Matrix3d A;
    A << 1e-3, 2e-4, -1e-4, 3e-4, -5e-4, 1e-4, 0, 2e-4, 4e-4;
    auto field = [&](int node) { return Eigen::Vector3d(A * m.nodes.row(node).transpose()); };

    // Boundary nodes prescribed, interior solved from the dense system.
    const auto K = dense_stiffness(m);
    const Eigen::Vector3d lo = m.nodes.colwise().minCoeff(), hi = m.nodes.colwise().maxCoeff();
    std::vector<int> inner, outer;
    for (int n = 0; n < m.nodes.rows(); ++n) {
        const Eigen::Vector3d p = m.nodes.row(n).transpose();
        const bool on = ((p - lo).cwiseAbs().minCoeff() < 1e-12) || ((p - hi).cwiseAbs().minCoeff() < 1e-12);
        for (int d = 0; d < 3; ++d) (on ? outer : inner).push_back(3 * n + d);
    }
    REQUIRE(!inner.empty());
    Eigen::VectorXd ub(static_cast<Eigen::Index>(outer.size()));
    for (std::size_t i = 0; i < outer.size(); ++i) ub[static_cast<Eigen::Index>(i)] = field(outer[i] / 3)[outer[i] % 3];
    Eigen::MatrixXd Kii(inner.size(), inner.size()), Kib(inner.size(), outer.size());
    for (std::size_t i = 0; i < inner.size(); ++i) {
        for (std::size_t j = 0; j < inner.size(); ++j) Kii(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = K(inner[i], inner[j]);
        for (std::size_t j = 0; j < outer.size(); ++j) Kib(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = K(inner[i], outer[j]);
    }
    const Eigen::VectorXd ui = Kii.ldlt().solve(-Kib * ub);
    for (std::size_t i = 0; i < inner.size(); ++i)
        CHECK(std::abs(ui[static_cast<Eigen::Index>(i)] - field(inner[i] / 3)[inner[i] % 3]) < 1e-12);

    // Stress at every Gauss point equals D eps of the applied field.
    const Eigen::Matrix3d eps = 0.5 * (A + A.transpose());
    Eigen::Matrix<double, 6, 1> ev;
    ev << eps(0, 0), eps(1, 1), eps(2, 2), 2 * eps(0, 1), 2 * eps(1, 2), 2 * eps(0, 2);
    const Eigen::Matrix<double, 6, 1> sigma = isotropic_elasticity(E, nu) * ev;
    for (std::size_t e = 0; e < m.elements.size(); ++e) {
        const auto X = m.element_coords(static_cast<int>(e));
        Eigen::Matrix<double, 18, 1> ue;
        for (int a = 0; a < 6; ++a) ue.segment<3>(3 * a) = field(m.elements[e].nodes[static_cast<std::size_t>(a)]);
        for (const auto& q : wedge_quadrature<double>()) {
            const auto B = wedge_strain_matrix(X, q[0], q[1], q[2]);
            CHECK((isotropic_elasticity(E, nu) * B * ue - sigma).norm() < 1e-10 * sigma.norm());
        }
    }
    // Uniaxial strain in x with free lateral faces reproduces sigma_xx = E eps.
    Eigen::Matrix<double, 6, 1> uni;
    uni << 1e-3, -nu * 1e-3, -nu * 1e-3, 0, 0, 0;
    CHECK((isotropic_elasticity(E, nu) * uni)[0] == doctest::Approx(E * 1e-3).epsilon(1e-12));
    CHECK(std::abs((isotropic_elasticity(E, nu) * uni)[1]) < 1e-12 * E);
}

TEST_CASE("single wedge cantilever against a dense solve")
{
    Eigen::MatrixX3d V(3, 3);
    V << 0, 0, 0, 1, 0, 0, 0, 1, 0;
    Eigen::MatrixX3i F(1, 3);
    F << 0, 1, 2;
    const TriSurfaceMesh tri(V, F);
    auto m = extrude_prisms(tri, ChartAtlas::single(tri, testgen::xy(tri)), 1, 0.2, 0.0, OffsetDirection::AlongNormal,
                            2.1e5, 0.3);
    REQUIRE(m.elements.size() == 1);
    const Box fix{Eigen::Vector3d(-1e-9, -1, -1), Eigen::Vector3d(1e-9, 2, 2)};
    apply_constraints(m, std::span<const Box>(&fix, 1));
    const LoadSpec tip{Box{Eigen::Vector3d(0.999, -1, -1), Eigen::Vector3d(1.001, 2, 2)}, Eigen::Vector3d(0, 3, -10)};
    apply_loads(m, std::span<const LoadSpec>(&tip, 1));
    const auto r = assemble_and_solve(m, Eigen::VectorXd::Ones(1));
    CHECK(r.free_dofs == 6);

    std::vector<int> free;
    for (int d = 0; d < m.num_dofs(); ++d)
        if (!m.fixed[static_cast<std::size_t>(d)]) free.push_back(d);
    Eigen::MatrixXd Kff(6, 6);
    Eigen::VectorXd Ff(6);
    const double s = stiffness_scale(1.0);
    for (int i = 0; i < 6; ++i) {
        Ff[i] = m.F[free[static_cast<std::size_t>(i)]];
        for (int j = 0; j < 6; ++j) Kff(i, j) = s * m.ke[0](free[static_cast<std::size_t>(i)], free[static_cast<std::size_t>(j)]);
    }
    const Eigen::VectorXd Uf = Kff.fullPivLu().solve(Ff);
    const double C = 0.5 * Ff.dot(Uf);
    CHECK(r.compliance == doctest::Approx(C).epsilon(1e-10));
    for (int i = 0; i < 6; ++i) CHECK(r.U[free[static_cast<std::size_t>(i)]] == doctest::Approx(Uf[i]).epsilon(1e-10));
    for (int d = 0; d < m.num_dofs(); ++d)
        if (m.fixed[static_cast<std::size_t>(d)]) CHECK(r.U[d] == 0.0);
}

TEST_CASE("compliance identities, linearity, monotonicity")
{
    auto m = cantilever();
    PrismSolver solver(m);
    const auto n = static_cast<Eigen::Index>(m.elements.size());
    std::mt19937 rng(12);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::VectorXd rho(n);
    for (Eigen::Index e = 0; e < n; ++e) rho[e] = u(rng);
    const auto r = solver.solve(rho);
    CHECK(r.residual < 1e-8);
    CHECK(r.rho == rho);

    const auto K = solver.reduced_stiffness(rho);
    const Eigen::SparseMatrix<double> Kfull = Eigen::SparseMatrix<double>(K.selfadjointView<Eigen::Lower>());
    Eigen::VectorXd Uf(Kfull.rows()), Ff(Kfull.rows());
    for (int d = 0; d < m.num_dofs(); ++d)
        if (const int i = solver.free_index()[static_cast<std::size_t>(d)]; i >= 0) {
            Uf[i] = r.U[d];
            Ff[i] = m.F[d];
        }
    CHECK(std::abs(0.5 * Uf.dot(Kfull * Uf) - 0.5 * Ff.dot(Uf)) < 1e-9 * r.compliance);
    CHECK(std::abs(r.compliance - 0.5 * m.F.dot(r.U)) <= 1e-9 * r.compliance);
    CHECK((Kfull * Uf - Ff).norm() <= 1e-8 * Ff.norm());

    auto doubled = m;
    doubled.F *= 2.0;
    CHECK(assemble_and_solve(doubled, rho).compliance == doctest::Approx(4 * r.compliance).epsilon(1e-9));

    for (int t = 0; t < 10; ++t) {
        Eigen::VectorXd a(n), b(n);
        for (Eigen::Index e = 0; e < n; ++e) {
            a[e] = u(rng);
            b[e] = std::min(1.0, a[e] + (u(rng) < 0.3 ? u(rng) : 0.0));
        }
        const double ca = solver.solve(a).compliance, cb = solver.solve(b).compliance;
        CHECK(cb <= ca + 1e-9 * ca);
    }
    // Reusing the solver gives the same answer bit-for-bit.
    CHECK(solver.solve(rho).U == r.U);
}

TEST_CASE("element densities from height fields")
{
    const auto m = plate(4, 4, 1.0, 1.0, 3, 0.5, 0.1);
    const double lt = 0.5 / 3;
    const std::vector<BSplineHeightField<double>> full{BSplineHeightField<double>(3, 3, 6, 6, 0.5, 0.5)};
    const std::vector<BSplineHeightField<double>> none{BSplineHeightField<double>(3, 3, 6, 6, 0.5, 0.0)};
    // The nearest layer midpoint is half a layer from 0 and H, so rho = 1 / (1 + exp(-beta lt / 2)) there.
    for (double blt : {8.0, 10.0, 16.0}) {
        const auto rf = element_densities(m, full, blt / lt), rn = element_densities(m, none, blt / lt);
        const double edge = 1.0 / (1.0 + std::exp(-blt / 2));
        for (std::size_t e = 0; e < m.elements.size(); ++e) {
            const auto k = static_cast<Eigen::Index>(e);
            const auto& el = m.elements[e];
            if (el.is_skin) {
                CHECK(rf[k] == 1.0);
                CHECK(rn[k] == 1.0);
                continue;
            }
            if (el.layer == m.n_layers - 1) CHECK(rf[k] == doctest::Approx(edge).epsilon(1e-12));
            if (el.layer == 0) CHECK(rn[k] == doctest::Approx(1.0 - edge).epsilon(1e-12));
            CHECK(rf[k] >= edge * (1 - 1e-12));
            CHECK(rn[k] <= (1.0 - edge) * (1 + 1e-12));
            if (blt >= 10.0) {
                CHECK(rf[k] > 0.99);
                CHECK(rn[k] < 0.01);
            }
        }
    }
    CHECK(stiffness_scale(0.0) == kRhoMin);
    CHECK(stiffness_scale(1.0) == 1.0);
}

TEST_CASE("boundary conditions and singular systems")
{
    auto m = plate(2, 2, 1.0, 1.0, 1, 0.2, 0.0);
    const LoadSpec load{Box{Eigen::Vector3d(0.9, -1, -1), Eigen::Vector3d(1.1, 2, 2)}, Eigen::Vector3d(0, 0, -6)};
    apply_loads(m, std::span<const LoadSpec>(&load, 1));
    CHECK(m.F.sum() == doctest::Approx(-6.0));
    CHECK_THROWS_AS(assemble_and_solve(m, Eigen::VectorXd::Ones(static_cast<Eigen::Index>(m.elements.size()))),
                    NumericalError);

    const Box fix{Eigen::Vector3d(0.9, -1, -1), Eigen::Vector3d(1.1, 2, 2)};
    CHECK_THROWS_AS(apply_constraints(m, std::span<const Box>(&fix, 1)), ValidationError);  // load on fixed DOF

    auto fresh = plate(2, 2, 1.0, 1.0, 1, 0.2, 0.0);
    const Box empty{Eigen::Vector3d(5, 5, 5), Eigen::Vector3d(6, 6, 6)};
    CHECK_THROWS_AS(apply_constraints(fresh, std::span<const Box>(&empty, 1)), ValidationError);
    const LoadSpec nowhere{empty, Eigen::Vector3d(1, 0, 0)};
    CHECK_THROWS_AS(apply_loads(fresh, std::span<const LoadSpec>(&nowhere, 1)), ValidationError);
    CHECK(select_nodes(fresh, Box{Eigen::Vector3d(-1, -1, -1), Eigen::Vector3d(2, 2, 2)}, 1).size() == 9);
}
