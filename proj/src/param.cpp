#include "stiffen/param.hpp"

#include "stiffen/error.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <queue>
#include <sstream>

namespace stiffen {

const char* to_string(ParamMethod method)
{
    switch (method) {
        case ParamMethod::Tutte: return "Tutte";
        case ParamMethod::Harmonic: return "Harmonic";
        case ParamMethod::ARAP: return "ARAP";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Per-triangle helpers
// ---------------------------------------------------------------------------

std::vector<Eigen::Matrix<double, 2, 3>> flatten_triangles(const TriSurfaceMesh& mesh)
{
    std::vector<Eigen::Matrix<double, 2, 3>> out(static_cast<std::size_t>(mesh.num_faces()));
    for (int f = 0; f < mesh.num_faces(); ++f) {
        const Eigen::Vector3d p0 = mesh.position(mesh.corner(f, 0));
        const Eigen::Vector3d e1 = mesh.position(mesh.corner(f, 1)) - p0;
        const Eigen::Vector3d e2 = mesh.position(mesh.corner(f, 2)) - p0;
        const double l1 = e1.norm();
        const Eigen::Vector3d x = e1 / l1;
        const double e2x = e2.dot(x);
        const double e2y = e2.cross(x).norm();
        auto& X = out[static_cast<std::size_t>(f)];
        X << 0.0, l1, e2x,
             0.0, 0.0, e2y;
    }
    return out;
}

Eigen::Matrix<double, 2, 3> face_uv(const TriSurfaceMesh& mesh, const Eigen::MatrixX2d& uv, int f)
{
    Eigen::Matrix<double, 2, 3> U;
    for (int k = 0; k < 3; ++k) U.col(k) = uv.row(mesh.corner(f, k)).transpose();
    return U;
}

std::vector<Eigen::Matrix2d> chart_jacobians(const TriSurfaceMesh& mesh, const Eigen::MatrixX2d& uv)
{
    const auto X = flatten_triangles(mesh);
    std::vector<Eigen::Matrix2d> J(X.size());
    for (int f = 0; f < mesh.num_faces(); ++f)
        J[static_cast<std::size_t>(f)] = triangle_jacobian(X[static_cast<std::size_t>(f)], face_uv(mesh, uv, f));
    return J;
}

std::vector<double> half_edge_cotangents(const TriSurfaceMesh& mesh)
{
    std::vector<double> cot(static_cast<std::size_t>(3 * mesh.num_faces()));
    for (int f = 0; f < mesh.num_faces(); ++f) {
        for (int k = 0; k < 3; ++k) {
            // Half-edge 3f+k runs corner k -> k+1; the opposite corner is k+2.
            const Eigen::Vector3d o = mesh.position(mesh.corner(f, (k + 2) % 3));
            const Eigen::Vector3d a = mesh.position(mesh.corner(f, k)) - o;
            const Eigen::Vector3d b = mesh.position(mesh.corner(f, (k + 1) % 3)) - o;
            const double c = a.dot(b) / a.cross(b).norm();
            cot[static_cast<std::size_t>(3 * f + k)] = std::clamp(std::isfinite(c) ? c : kCotMax, kCotMin, kCotMax);
        }
    }
    return cot;
}

// ---------------------------------------------------------------------------
// Boundary placement
// ---------------------------------------------------------------------------

BoundaryUV map_boundary_to_circle(const TriSurfaceMesh& mesh, std::span<const int> loop)
{
    const std::size_t n = loop.size();
    if (n < 3) throw ValidationError("boundary loop needs at least 3 vertices");
    std::vector<double> cumulative(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        total += (mesh.position(loop[(i + 1) % n]) - mesh.position(loop[i])).norm();
        cumulative[i] = total;
    }
    if (!(total > 0.0)) throw ValidationError("boundary loop has zero length");
    BoundaryUV out;
    out.vertices.assign(loop.begin(), loop.end());
    out.uv.resize(static_cast<Eigen::Index>(n), 2);
    for (std::size_t i = 0; i < n; ++i) {
        const double angle = 2.0 * std::numbers::pi * (cumulative[i] / total);
        out.uv(static_cast<Eigen::Index>(i), 0) = (std::sin(angle) + 1.0) / 2.0;
        out.uv(static_cast<Eigen::Index>(i), 1) = (std::cos(angle) + 1.0) / 2.0;
    }
    return out;
}

std::vector<int> positive_circle_order(std::span<const int> loop)
{
    std::vector<int> out(loop.begin(), loop.end());
    if (!out.empty()) std::reverse(out.begin() + 1, out.end());
    return out;
}

BoundaryUV map_boundary_to_square(const TriSurfaceMesh& mesh, std::span<const int> loop,
                                  const std::array<int, 4>& corners)
{
    const int n = static_cast<int>(loop.size());
    if (n < 4) throw ValidationError("square boundary needs at least 4 loop vertices");
    for (int c : corners)
        if (c < 0 || c >= n) throw ValidationError("square corner position out of range");
    // Cyclic order: offsets from the first corner strictly increase.
    for (int s = 1; s < 4; ++s) {
        const int prev = ((corners[static_cast<std::size_t>(s - 1)] - corners[0]) % n + n) % n;
        const int cur = ((corners[static_cast<std::size_t>(s)] - corners[0]) % n + n) % n;
        if (cur <= prev) throw ValidationError("square corners are not distinct positions in cyclic loop order");
    }
    static const Eigen::Vector2d targets[4] = {{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}};
    BoundaryUV out;
    out.vertices.assign(loop.begin(), loop.end());
    out.uv.resize(n, 2);
    for (int s = 0; s < 4; ++s) {
        const int start = corners[static_cast<std::size_t>(s)];
        const int stop = corners[static_cast<std::size_t>((s + 1) % 4)];
        const int steps = ((stop - start) % n + n) % n;
        std::vector<double> cumulative(static_cast<std::size_t>(steps) + 1, 0.0);
        for (int i = 0; i < steps; ++i) {
            const int a = loop[static_cast<std::size_t>((start + i) % n)];
            const int b = loop[static_cast<std::size_t>((start + i + 1) % n)];
            cumulative[static_cast<std::size_t>(i) + 1] =
                cumulative[static_cast<std::size_t>(i)] + (mesh.position(b) - mesh.position(a)).norm();
        }
        const double side = cumulative.back();
        for (int i = 0; i < steps; ++i) {
            const double t = side > 0.0 ? cumulative[static_cast<std::size_t>(i)] / side : 0.0;
            out.uv.row((start + i) % n) =
                ((1.0 - t) * targets[s] + t * targets[(s + 1) % 4]).transpose();
        }
    }
    return out;
}

std::array<int, 4> square_corners(const TriSurfaceMesh& mesh, std::span<const int> loop)
{
    const int n = static_cast<int>(loop.size());
    if (n < 4) throw ValidationError("square boundary needs at least 4 loop vertices");
    std::vector<double> angle_sum(static_cast<std::size_t>(mesh.num_vertices()), 0.0);
    for (int f = 0; f < mesh.num_faces(); ++f) {
        for (int k = 0; k < 3; ++k) {
            const Eigen::Vector3d p = mesh.position(mesh.corner(f, k));
            const Eigen::Vector3d a = mesh.position(mesh.corner(f, (k + 1) % 3)) - p;
            const Eigen::Vector3d b = mesh.position(mesh.corner(f, (k + 2) % 3)) - p;
            angle_sum[static_cast<std::size_t>(mesh.corner(f, k))] += std::atan2(a.cross(b).norm(), a.dot(b));
        }
    }
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int i, int j) {
        return angle_sum[static_cast<std::size_t>(loop[static_cast<std::size_t>(i)])] <
               angle_sum[static_cast<std::size_t>(loop[static_cast<std::size_t>(j)])];
    });
    std::array<int, 4> corners{};
    bool sharp = true;
    for (int s = 0; s < 4; ++s) {
        corners[static_cast<std::size_t>(s)] = order[static_cast<std::size_t>(s)];
        if (angle_sum[static_cast<std::size_t>(loop[static_cast<std::size_t>(order[static_cast<std::size_t>(s)])])] >=
            0.75 * std::numbers::pi)
            sharp = false;
    }
    if (sharp) {
        std::sort(corners.begin(), corners.end());
        return corners;
    }
    // Quarter points by arc length.
    std::vector<double> cumulative(static_cast<std::size_t>(n) + 1, 0.0);
    for (int i = 0; i < n; ++i)
        cumulative[static_cast<std::size_t>(i) + 1] =
            cumulative[static_cast<std::size_t>(i)] +
            (mesh.position(loop[static_cast<std::size_t>((i + 1) % n)]) - mesh.position(loop[static_cast<std::size_t>(i)])).norm();
    const double total = cumulative.back();
    int last = -1;
    for (int s = 0; s < 4; ++s) {
        const double target = total * s / 4.0;
        int best = last + 1;
        for (int i = last + 1; i <= n - (4 - s); ++i)
            if (std::abs(cumulative[static_cast<std::size_t>(i)] - target) <
                std::abs(cumulative[static_cast<std::size_t>(best)] - target))
                best = i;
        corners[static_cast<std::size_t>(s)] = best;
        last = best;
    }
    return corners;
}

// ---------------------------------------------------------------------------
// Linear embeddings
// ---------------------------------------------------------------------------

namespace {

std::vector<char> fixed_flags(const TriSurfaceMesh& mesh, const BoundaryUV& boundary)
{
    if (boundary.uv.rows() != static_cast<Eigen::Index>(boundary.vertices.size()))
        throw ValidationError("boundary uv count does not match boundary vertex count");
    std::vector<char> fixed(static_cast<std::size_t>(mesh.num_vertices()), 0);
    for (int v : boundary.vertices) {
        if (v < 0 || v >= mesh.num_vertices()) throw ValidationError("boundary vertex out of range");
        fixed[static_cast<std::size_t>(v)] = 1;
    }
    return fixed;
}

void require_reachable(const TriSurfaceMesh& mesh, std::span<const char> fixed)
{
    std::vector<char> seen(fixed.begin(), fixed.end());
    std::queue<int> queue;
    for (int v = 0; v < mesh.num_vertices(); ++v)
        if (seen[static_cast<std::size_t>(v)]) queue.push(v);
    while (!queue.empty()) {
        const int v = queue.front();
        queue.pop();
        for (int w : one_ring(mesh, v))
            if (!seen[static_cast<std::size_t>(w)]) {
                seen[static_cast<std::size_t>(w)] = 1;
                queue.push(w);
            }
    }
    for (int v = 0; v < mesh.num_vertices(); ++v)
        if (!seen[static_cast<std::size_t>(v)])
            throw NumericalError("singular system: vertex " + std::to_string(v) +
                                 " is not connected to any prescribed boundary vertex");
}

/// Free vertex index map; -1 for fixed vertices.
std::vector<int> free_index(std::span<const char> fixed, int& count)
{
    std::vector<int> index(fixed.size(), -1);
    count = 0;
    for (std::size_t v = 0; v < fixed.size(); ++v)
        if (!fixed[v]) index[v] = count++;
    return index;
}

Eigen::MatrixX2d scatter_boundary(const TriSurfaceMesh& mesh, const BoundaryUV& boundary)
{
    Eigen::MatrixX2d uv = Eigen::MatrixX2d::Zero(mesh.num_vertices(), 2);
    for (std::size_t k = 0; k < boundary.vertices.size(); ++k)
        uv.row(boundary.vertices[k]) = boundary.uv.row(static_cast<Eigen::Index>(k));
    return uv;
}

}  // namespace

Eigen::SparseMatrix<double, Eigen::RowMajor> convex_weights(const TriSurfaceMesh& mesh,
                                                            std::span<const char> fixed,
                                                            WeightScheme scheme)
{
    const int nv = mesh.num_vertices();
    std::vector<Eigen::Triplet<double>> triplets;
    if (scheme == WeightScheme::Uniform) {
        for (int v = 0; v < nv; ++v) {
            if (fixed[static_cast<std::size_t>(v)]) continue;
            const auto ring = one_ring(mesh, v);
            for (int w : ring) triplets.emplace_back(v, w, 1.0 / static_cast<double>(ring.size()));
        }
    } else {
        // Mean-value weights: tan(delta/2) / |x_j - x_i| per adjacent corner angle delta.
        for (int f = 0; f < mesh.num_faces(); ++f) {
            for (int k = 0; k < 3; ++k) {
                const int i = mesh.corner(f, k);
                if (fixed[static_cast<std::size_t>(i)]) continue;
                const int j = mesh.corner(f, (k + 1) % 3);
                const int l = mesh.corner(f, (k + 2) % 3);
                const Eigen::Vector3d a = mesh.position(j) - mesh.position(i);
                const Eigen::Vector3d b = mesh.position(l) - mesh.position(i);
                const double half_tan = a.cross(b).norm() / (a.norm() * b.norm() + a.dot(b));
                triplets.emplace_back(i, j, half_tan / a.norm());
                triplets.emplace_back(i, l, half_tan / b.norm());
            }
        }
    }
    Eigen::SparseMatrix<double, Eigen::RowMajor> W(nv, nv);
    W.setFromTriplets(triplets.begin(), triplets.end());
    if (scheme == WeightScheme::MeanValue) {
        for (int r = 0; r < nv; ++r) {
            double sum = 0.0;
            for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(W, r); it; ++it) sum += it.value();
            if (sum > 0.0)
                for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(W, r); it; ++it)
                    it.valueRef() /= sum;
        }
    }
    return W;
}

ParamChart convex_combination(const TriSurfaceMesh& mesh, const BoundaryUV& boundary,
                              WeightScheme scheme)
{
    const auto fixed = fixed_flags(mesh, boundary);
    require_reachable(mesh, fixed);
    int nfree = 0;
    const auto index = free_index(fixed, nfree);

    ParamChart chart;
    chart.uv = scatter_boundary(mesh, boundary);
    chart.fixed_boundary = fixed;
    chart.provenance = ParamMethod::Tutte;
    if (nfree == 0) return chart;

    const auto W = convex_weights(mesh, fixed, scheme);
    std::vector<Eigen::Triplet<double>> triplets;
    Eigen::MatrixX2d rhs = Eigen::MatrixX2d::Zero(nfree, 2);
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        const int r = index[static_cast<std::size_t>(v)];
        if (r < 0) continue;
        triplets.emplace_back(r, r, 1.0);
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(W, v); it; ++it) {
            const int c = index[static_cast<std::size_t>(it.col())];
            if (c >= 0) triplets.emplace_back(r, c, -it.value());
            else rhs.row(r) += it.value() * chart.uv.row(it.col());
        }
    }
    Eigen::SparseMatrix<double> A(nfree, nfree);
    A.setFromTriplets(triplets.begin(), triplets.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) throw NumericalError("convex-combination system is singular");
    const Eigen::MatrixX2d x = lu.solve(rhs);
    if (lu.info() != Eigen::Success || !x.allFinite())
        throw NumericalError("convex-combination solve failed");
    for (int v = 0; v < mesh.num_vertices(); ++v)
        if (index[static_cast<std::size_t>(v)] >= 0) chart.uv.row(v) = x.row(index[static_cast<std::size_t>(v)]);
    return chart;
}

ParamChart tutte_embed(const TriSurfaceMesh& mesh, const BoundaryUV& boundary, WeightScheme scheme)
{
    const auto topo = classify_topology(mesh);
    if (topo.tag == TopologyTag::MultiBoundary)
        throw TopologyError("convex-combination embedding needs a single-boundary mesh; this mesh has " +
                            std::to_string(topo.boundary_count) +
                            " boundary loops, cut it into a single-boundary surface first (seam cut)");
    if (topo.tag == TopologyTag::Closed)
        throw TopologyError("convex-combination embedding needs a single-boundary mesh; the mesh is closed, "
                            "apply a seam cut first");
    return convex_combination(mesh, boundary, scheme);
}

std::vector<double> uniform_spring_weights(const TriSurfaceMesh& mesh)
{
    return std::vector<double>(static_cast<std::size_t>(mesh.num_edges()), 1.0);
}

std::vector<double> cotan_spring_weights(const TriSurfaceMesh& mesh)
{
    const auto cot = half_edge_cotangents(mesh);
    std::vector<double> k(static_cast<std::size_t>(mesh.num_edges()), 0.0);
    for (std::size_t h = 0; h < cot.size(); ++h)
        k[static_cast<std::size_t>(mesh.half_edge(static_cast<int>(h)).edge)] += 0.5 * cot[h];
    return k;
}

ParamChart harmonic_embed(const TriSurfaceMesh& mesh, const BoundaryUV& boundary,
                          std::span<const double> spring_weights)
{
    if (static_cast<int>(spring_weights.size()) != mesh.num_edges())
        throw ValidationError("one spring weight per edge required");
    for (double k : spring_weights)
        if (!(k > 0.0)) throw ValidationError("spring weights must be positive");
    const auto topo = classify_topology(mesh);
    if (topo.tag != TopologyTag::SingleBoundary)
        throw TopologyError("harmonic embedding needs a single-boundary mesh (got " +
                            std::string(to_string(topo.tag)) + ")");
    const auto fixed = fixed_flags(mesh, boundary);
    require_reachable(mesh, fixed);
    int nfree = 0;
    const auto index = free_index(fixed, nfree);

    ParamChart chart;
    chart.uv = scatter_boundary(mesh, boundary);
    chart.fixed_boundary = fixed;
    chart.provenance = ParamMethod::Harmonic;
    if (nfree == 0) return chart;

    std::vector<Eigen::Triplet<double>> triplets;
    Eigen::MatrixX2d rhs = Eigen::MatrixX2d::Zero(nfree, 2);
    Eigen::VectorXd row_sum = Eigen::VectorXd::Zero(nfree);
    for (int e = 0; e < mesh.num_edges(); ++e) {
        const auto [a, b] = mesh.edges()[static_cast<std::size_t>(e)];
        const double k = spring_weights[static_cast<std::size_t>(e)];
        const int ia = index[static_cast<std::size_t>(a)], ib = index[static_cast<std::size_t>(b)];
        if (ia >= 0) {
            triplets.emplace_back(ia, ia, k);
            row_sum(ia) += k;
            if (ib >= 0) triplets.emplace_back(ia, ib, -k);
            else rhs.row(ia) += k * chart.uv.row(b);
        }
        if (ib >= 0) {
            triplets.emplace_back(ib, ib, k);
            row_sum(ib) += k;
            if (ia >= 0) triplets.emplace_back(ib, ia, -k);
            else rhs.row(ib) += k * chart.uv.row(a);
        }
    }
    if (row_sum.minCoeff() <= 0.0) throw NumericalError("nonpositive spring row sum");
    Eigen::SparseMatrix<double> A(nfree, nfree);
    A.setFromTriplets(triplets.begin(), triplets.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
    if (ldlt.info() != Eigen::Success) throw NumericalError("harmonic system factorization failed");
    const Eigen::MatrixX2d x = ldlt.solve(rhs);
    if (!x.allFinite()) throw NumericalError("harmonic solve failed");
    for (int v = 0; v < mesh.num_vertices(); ++v)
        if (index[static_cast<std::size_t>(v)] >= 0) chart.uv.row(v) = x.row(index[static_cast<std::size_t>(v)]);
    return chart;
}

Eigen::VectorXd harmonic_residual(const TriSurfaceMesh& mesh, const Eigen::MatrixX2d& uv,
                                  std::span<const double> spring_weights, std::span<const char> fixed)
{
    Eigen::MatrixX2d r = Eigen::MatrixX2d::Zero(mesh.num_vertices(), 2);
    for (int e = 0; e < mesh.num_edges(); ++e) {
        const auto [a, b] = mesh.edges()[static_cast<std::size_t>(e)];
        const Eigen::RowVector2d d = spring_weights[static_cast<std::size_t>(e)] * (uv.row(a) - uv.row(b));
        r.row(a) += d;
        r.row(b) -= d;
    }
    Eigen::VectorXd out = r.rowwise().norm();
    for (int v = 0; v < mesh.num_vertices(); ++v)
        if (fixed[static_cast<std::size_t>(v)]) out(v) = 0.0;
    return out;
}

// ---------------------------------------------------------------------------
// Local/global energy minimisation
// ---------------------------------------------------------------------------

namespace {

// Minimiser of sum_k w_k |du_k - L dx_k|^2 over the chosen family of L. With unclamped
// cotangent weights this is the Frobenius fit of the triangle Jacobian.
SimilarityFit<double> fit_weighted(const Eigen::Matrix<double, 2, 3>& X, const Eigen::Matrix<double, 2, 3>& U,
                                   const double* w, ArapVariant variant)
{
    if (variant == ArapVariant::Similarity) {
        double sa = 0.0, sb = 0.0, norm = 0.0;
        for (int k = 0; k < 3; ++k) {
            const Eigen::Vector2d dx = X.col(k) - X.col((k + 1) % 3);
            const Eigen::Vector2d du = U.col(k) - U.col((k + 1) % 3);
            const Eigen::Vector2d q(dx.y(), -dx.x());
            sa += w[k] * du.dot(dx);
            sb += w[k] * du.dot(q);
            norm += w[k] * dx.squaredNorm();
        }
        return {sa / norm, sb / norm};
    }
    Eigen::Matrix2d S = Eigen::Matrix2d::Zero();
    for (int k = 0; k < 3; ++k)
        S += w[k] * (U.col(k) - U.col((k + 1) % 3)) * (X.col(k) - X.col((k + 1) % 3)).transpose();
    return fit_rotation(S);
}

std::vector<SimilarityFit<double>> fit_local_with(const TriSurfaceMesh& mesh,
                                                  const std::vector<Eigen::Matrix<double, 2, 3>>& X,
                                                  const std::vector<double>& cot, const Eigen::MatrixX2d& uv,
                                                  ArapVariant variant)
{
    std::vector<SimilarityFit<double>> fits(X.size());
    for (int f = 0; f < mesh.num_faces(); ++f)
        fits[static_cast<std::size_t>(f)] = fit_weighted(X[static_cast<std::size_t>(f)], face_uv(mesh, uv, f),
                                                         &cot[static_cast<std::size_t>(3 * f)], variant);
    return fits;
}

}  // namespace

std::vector<SimilarityFit<double>> fit_local(const TriSurfaceMesh& mesh, const Eigen::MatrixX2d& uv,
                                             ArapVariant variant)
{
    return fit_local_with(mesh, flatten_triangles(mesh), half_edge_cotangents(mesh), uv, variant);
}

namespace {

double energy_with(const TriSurfaceMesh& mesh, const std::vector<Eigen::Matrix<double, 2, 3>>& X,
                   const std::vector<double>& cot, const Eigen::MatrixX2d& uv,
                   std::span<const SimilarityFit<double>> fits)
{
    double sum = 0.0;
    for (int f = 0; f < mesh.num_faces(); ++f) {
        const Eigen::Matrix2d L = fits[static_cast<std::size_t>(f)].matrix();
        const auto& Xf = X[static_cast<std::size_t>(f)];
        for (int k = 0; k < 3; ++k) {
            const int i = mesh.corner(f, k), j = mesh.corner(f, (k + 1) % 3);
            const Eigen::Vector2d du = (uv.row(i) - uv.row(j)).transpose();
            const Eigen::Vector2d dx = Xf.col(k) - Xf.col((k + 1) % 3);
            sum += cot[static_cast<std::size_t>(3 * f + k)] * (du - L * dx).squaredNorm();
        }
    }
    return 0.5 * sum;
}

}  // namespace

double arap_energy(const TriSurfaceMesh& mesh, const Eigen::MatrixX2d& uv,
                   std::span<const SimilarityFit<double>> fits)
{
    if (static_cast<int>(fits.size()) != mesh.num_faces())
        throw ValidationError("one similarity fit per triangle required");
    return energy_with(mesh, flatten_triangles(mesh), half_edge_cotangents(mesh), uv, fits);
}

double arap_energy_area_form(const TriSurfaceMesh& mesh, const Eigen::MatrixX2d& uv,
                             std::span<const SimilarityFit<double>> fits)
{
    if (static_cast<int>(fits.size()) != mesh.num_faces())
        throw ValidationError("one similarity fit per triangle required");
    const auto J = chart_jacobians(mesh, uv);
    double sum = 0.0;
    for (int f = 0; f < mesh.num_faces(); ++f)
        sum += mesh.face_area(f) * (J[static_cast<std::size_t>(f)] - fits[static_cast<std::size_t>(f)].matrix()).squaredNorm();
    return sum;
}

Eigen::MatrixX2d normalize_to_unit_square(const Eigen::MatrixX2d& uv)
{
    const Eigen::RowVector2d lo = uv.colwise().minCoeff();
    const Eigen::RowVector2d hi = uv.colwise().maxCoeff();
    const double side = (hi - lo).maxCoeff();
    if (!(side > 0.0)) throw NumericalError("chart collapsed to a point");
    return (uv.rowwise() - lo) / side;
}

std::vector<int> flipped_triangles(const TriSurfaceMesh& mesh, const Eigen::MatrixX2d& uv)
{
    std::vector<double> area(static_cast<std::size_t>(mesh.num_faces()));
    double total = 0.0;
    for (int f = 0; f < mesh.num_faces(); ++f) {
        area[static_cast<std::size_t>(f)] = signed_area(face_uv(mesh, uv, f));
        total += area[static_cast<std::size_t>(f)];
    }
    const double sign = total >= 0.0 ? 1.0 : -1.0;
    std::vector<int> out;
    for (int f = 0; f < mesh.num_faces(); ++f)
        if (!(sign * area[static_cast<std::size_t>(f)] > 0.0)) out.push_back(f);
    return out;
}

ArapResult arap_flatten(const TriSurfaceMesh& mesh, const ParamChart& init, const ArapOptions& options)
{
    if (init.uv.rows() != mesh.num_vertices()) throw ValidationError("initial chart does not cover the mesh");
    if (mesh.boundary_loops().empty())
        throw TopologyError("free-boundary flattening needs a mesh with boundary; cut closed meshes first");
    if (options.max_iters < 1) throw ValidationError("max_iters must be at least 1");

    const auto X = flatten_triangles(mesh);
    const auto cot = half_edge_cotangents(mesh);

    // Pin the endpoints of the longest boundary edge to remove the similarity null-space.
    ArapResult result;
    double longest = -1.0;
    for (const auto& he : mesh.half_edges()) {
        if (he.twin >= 0) continue;
        const double len = (mesh.position(he.to) - mesh.position(he.from)).norm();
        if (len > longest) {
            longest = len;
            result.pinned = {he.from, he.to};
        }
    }
    const int p0 = result.pinned[0], p1 = result.pinned[1];
    const bool pin_both = options.variant == ArapVariant::Similarity;

    // Rescale the initial chart so the pinned pair keeps its 3D length.
    Eigen::MatrixX2d uv = init.uv;
    const double init_len = (uv.row(p1) - uv.row(p0)).norm();
    if (!(init_len > 0.0)) throw NumericalError("initial chart collapses the pinned boundary edge");
    const Eigen::RowVector2d anchor = uv.row(p0);
    uv = ((uv.rowwise() - anchor) * (longest / init_len)).rowwise() + anchor;

    const int nv = mesh.num_vertices();
    std::vector<char> pinned(static_cast<std::size_t>(nv), 0);
    pinned[static_cast<std::size_t>(p0)] = 1;
    if (pin_both) pinned[static_cast<std::size_t>(p1)] = 1;
    int nfree = 0;
    const auto index = free_index(pinned, nfree);

    // Cotangent Laplacian on free vertices; the pattern and values are fixed across sweeps.
    std::vector<Eigen::Triplet<double>> triplets;
    for (int f = 0; f < mesh.num_faces(); ++f) {
        for (int k = 0; k < 3; ++k) {
            const int i = mesh.corner(f, k), j = mesh.corner(f, (k + 1) % 3);
            const double w = cot[static_cast<std::size_t>(3 * f + k)];
            const int ii = index[static_cast<std::size_t>(i)], jj = index[static_cast<std::size_t>(j)];
            if (ii >= 0) triplets.emplace_back(ii, ii, w);
            if (jj >= 0) triplets.emplace_back(jj, jj, w);
            if (ii >= 0 && jj >= 0) {
                triplets.emplace_back(ii, jj, -w);
                triplets.emplace_back(jj, ii, -w);
            }
        }
    }
    Eigen::SparseMatrix<double> A(nfree, nfree);
    A.setFromTriplets(triplets.begin(), triplets.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
    if (solver.info() != Eigen::Success) throw NumericalError("global-step factorization failed");

    auto global_step = [&](std::span<const SimilarityFit<double>> fits) {
        Eigen::MatrixX2d rhs = Eigen::MatrixX2d::Zero(nfree, 2);
        for (int f = 0; f < mesh.num_faces(); ++f) {
            const Eigen::Matrix2d L = fits[static_cast<std::size_t>(f)].matrix();
            const auto& Xf = X[static_cast<std::size_t>(f)];
            for (int k = 0; k < 3; ++k) {
                const int i = mesh.corner(f, k), j = mesh.corner(f, (k + 1) % 3);
                const double w = cot[static_cast<std::size_t>(3 * f + k)];
                const Eigen::RowVector2d r = (w * (L * (Xf.col(k) - Xf.col((k + 1) % 3)))).transpose();
                const int ii = index[static_cast<std::size_t>(i)], jj = index[static_cast<std::size_t>(j)];
                if (ii >= 0) {
                    rhs.row(ii) += r;
                    if (jj < 0) rhs.row(ii) += w * uv.row(j);
                }
                if (jj >= 0) {
                    rhs.row(jj) -= r;
                    if (ii < 0) rhs.row(jj) += w * uv.row(i);
                }
            }
        }
        const Eigen::MatrixX2d x = solver.solve(rhs);
        if (!x.allFinite()) throw NumericalError("global-step solve failed");
        for (int v = 0; v < nv; ++v)
            if (index[static_cast<std::size_t>(v)] >= 0) uv.row(v) = x.row(index[static_cast<std::size_t>(v)]);
    };

    // Energies below this are round-off for a chart of the mesh's own size.
    const double energy_floor = 1e-14 * mesh.total_area();
    auto fits = fit_local_with(mesh, X, cot, uv, options.variant);
    double energy = energy_with(mesh, X, cot, uv, fits);
    result.energy_history.push_back(energy);
    for (int sweep = 1; sweep <= options.max_iters; ++sweep) {
        global_step(fits);
        fits = fit_local_with(mesh, X, cot, uv, options.variant);
        const double next = energy_with(mesh, X, cot, uv, fits);
        result.energy_history.push_back(next);
        result.sweeps = sweep;
        const double change = std::abs(energy - next);
        energy = next;
        if (change <= options.tol * std::max(next, energy_floor)) {
            result.converged = true;
            break;
        }
    }
    if (!result.converged) {
        std::ostringstream os;
        os << "energy minimisation stopped at max_iters=" << options.max_iters
           << " without reaching relative tolerance " << options.tol;
        result.warnings.push_back(os.str());
    }

    result.fits = fits;
    result.flipped = flipped_triangles(mesh, uv);
    if (!result.flipped.empty())
        result.warnings.push_back(std::to_string(result.flipped.size()) + " flipped parametric triangle(s)");
    result.chart.uv = options.normalize ? normalize_to_unit_square(uv) : uv;
    result.chart.chart_id = init.chart_id;
    result.chart.fixed_boundary.assign(static_cast<std::size_t>(nv), 0);
    result.chart.provenance = ParamMethod::ARAP;
    return result;
}

}  // namespace stiffen
