#pragma once

#include "stiffen/mesh.hpp"

#include <Eigen/Core>
#include <Eigen/SVD>
#include <Eigen/SparseCore>

#include <array>
#include <span>
#include <string>
#include <vector>

namespace stiffen {

enum class ParamMethod { Tutte, Harmonic, ARAP };
const char* to_string(ParamMethod method);

/// Per-vertex parametric coordinates of one chart.
struct ParamChart {
    Eigen::MatrixX2d uv;
    int chart_id = 0;
    std::vector<char> fixed_boundary;  ///< 1 where the vertex was prescribed
    ParamMethod provenance = ParamMethod::Tutte;
};

/// Prescribed boundary placement: uv.row(k) belongs to vertices[k].
struct BoundaryUV {
    std::vector<int> vertices;
    Eigen::MatrixX2d uv;
};

// ---------------------------------------------------------------------------
// Per-triangle kernels
// ---------------------------------------------------------------------------

/// Rotation plus uniform scale, [[a, b], [-b, a]].
template <typename Scalar>
struct SimilarityFit {
    Scalar a{0};
    Scalar b{0};

    Eigen::Matrix<Scalar, 2, 2> matrix() const
    {
        Eigen::Matrix<Scalar, 2, 2> m;
        m << a, b, -b, a;
        return m;
    }
};

/// Closest similarity to J in the Frobenius norm.
template <typename Derived>
SimilarityFit<typename Derived::Scalar> fit_similarity(const Eigen::MatrixBase<Derived>& J)
{
    using Scalar = typename Derived::Scalar;
    return {Scalar(0.5) * (J(0, 0) + J(1, 1)), Scalar(0.5) * (J(0, 1) - J(1, 0))};
}

/// Closest rotation to J (det = +1), written in the similarity parameterization.
template <typename Derived>
SimilarityFit<typename Derived::Scalar> fit_rotation(const Eigen::MatrixBase<Derived>& J)
{
    using Scalar = typename Derived::Scalar;
    using Mat2 = Eigen::Matrix<Scalar, 2, 2>;
    Eigen::JacobiSVD<Mat2> svd(Mat2(J), Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat2 U = svd.matrixU();
    const Mat2 V = svd.matrixV();
    if ((U * V.transpose()).determinant() < Scalar(0)) U.col(1) *= Scalar(-1);
    const Mat2 R = U * V.transpose();
    return {R(0, 0), R(0, 1)};
}

/// Jacobian of the affine map taking the planar triangle X (2x3) onto U (2x3).
template <typename DX, typename DU>
Eigen::Matrix<typename DX::Scalar, 2, 2> triangle_jacobian(const Eigen::MatrixBase<DX>& X,
                                                           const Eigen::MatrixBase<DU>& U)
{
    using Scalar = typename DX::Scalar;
    Eigen::Matrix<Scalar, 2, 2> dx, du;
    dx << X.col(1) - X.col(0), X.col(2) - X.col(0);
    du << U.col(1) - U.col(0), U.col(2) - U.col(0);
    return du * dx.inverse();
}

/// Signed area of a planar triangle given as a 2x3 matrix of corner coordinates.
template <typename Derived>
typename Derived::Scalar signed_area(const Eigen::MatrixBase<Derived>& P)
{
    const auto e1 = P.col(1) - P.col(0);
    const auto e2 = P.col(2) - P.col(0);
    return typename Derived::Scalar(0.5) * (e1.x() * e2.y() - e1.y() * e2.x());
}

/// Each triangle moved rigidly to the XY plane: corner 0 at the origin, corner 1 on +X.
std::vector<Eigen::Matrix<double, 2, 3>> flatten_triangles(const TriSurfaceMesh& mesh);

/// Corner uv of face f as a 2x3 matrix.
Eigen::Matrix<double, 2, 3> face_uv(const TriSurfaceMesh& mesh, const Eigen::MatrixX2d& uv, int f);

/// Per-face Jacobians from the rigidly flattened 3D triangle to uv.
std::vector<Eigen::Matrix2d> chart_jacobians(const TriSurfaceMesh& mesh, const Eigen::MatrixX2d& uv);

/// Cotangent of the angle opposite each half-edge, clamped to [1e-6, 1e6].
std::vector<double> half_edge_cotangents(const TriSurfaceMesh& mesh);
inline constexpr double kCotMin = 1e-6;
inline constexpr double kCotMax = 1e6;

// ---------------------------------------------------------------------------
// Boundary placement
// ---------------------------------------------------------------------------

/// Arc-length placement on the circle of radius 1/2 centred at (1/2, 1/2).
/// Loop point k sits at angle 2*pi*(length of edges 0..k)/(loop length), with
/// xi = (sin + 1)/2 and eta = (cos + 1)/2. In the (xi, eta) frame this runs clockwise,
/// so pass the loop reversed (see positive_circle_order) to obtain a chart with
/// positively oriented triangles.
BoundaryUV map_boundary_to_circle(const TriSurfaceMesh& mesh, std::span<const int> loop);

/// Reverses a surface-on-the-left boundary loop, keeping its first vertex first.
std::vector<int> positive_circle_order(std::span<const int> loop);

/// Corners (loop positions, cyclic order) go to (0,0), (1,0), (1,1), (0,1); points in
/// between are placed along each side by 3D arc length.
BoundaryUV map_boundary_to_square(const TriSurfaceMesh& mesh, std::span<const int> loop,
                                  const std::array<int, 4>& corner_positions);

/// Four loop positions with the smallest interior surface angle when these are clearly
/// corners (below 3/4 pi), otherwise the quarter points by arc length.
std::array<int, 4> square_corners(const TriSurfaceMesh& mesh, std::span<const int> loop);

// ---------------------------------------------------------------------------
// Linear embeddings
// ---------------------------------------------------------------------------

enum class WeightScheme { Uniform, MeanValue };

/// Row-stochastic convex-combination weights: rows of prescribed vertices are zero.
Eigen::SparseMatrix<double, Eigen::RowMajor> convex_weights(const TriSurfaceMesh& mesh,
                                                            std::span<const char> fixed,
                                                            WeightScheme scheme);

/// Convex-combination embedding on a SingleBoundary mesh. Throws TopologyError otherwise.
ParamChart tutte_embed(const TriSurfaceMesh& mesh, const BoundaryUV& boundary,
                       WeightScheme scheme = WeightScheme::Uniform);

/// Same linear solve without the topology check; vertices of other boundary loops are
/// treated as free. Used to initialise the energy minimisation on multi-boundary meshes,
/// where the result may overlap.
ParamChart convex_combination(const TriSurfaceMesh& mesh, const BoundaryUV& boundary,
                              WeightScheme scheme = WeightScheme::Uniform);

/// One weight per undirected edge (mesh.edges() order).
std::vector<double> uniform_spring_weights(const TriSurfaceMesh& mesh);
/// (cot alpha + cot beta) / 2 with each cotangent clamped.
std::vector<double> cotan_spring_weights(const TriSurfaceMesh& mesh);

/// Minimiser of the spring energy 1/2 sum k_ij |u_i - u_j|^2 with the boundary fixed.
ParamChart harmonic_embed(const TriSurfaceMesh& mesh, const BoundaryUV& boundary,
                          std::span<const double> spring_weights);

/// Per-vertex |sum_j k_ij (u_i - u_j)|; zero rows for fixed vertices.
Eigen::VectorXd harmonic_residual(const TriSurfaceMesh& mesh, const Eigen::MatrixX2d& uv,
                                  std::span<const double> spring_weights,
                                  std::span<const char> fixed);

// ---------------------------------------------------------------------------
// Local/global energy minimisation
// ---------------------------------------------------------------------------

enum class ArapVariant { Similarity, Rigid };

struct ArapOptions {
    double tol = 1e-6;  ///< relative energy change between sweeps
    int max_iters = 100;
    ArapVariant variant = ArapVariant::Similarity;
    bool normalize = true;
};

struct ArapResult {
    ParamChart chart;
    std::vector<SimilarityFit<double>> fits;  ///< fits for the returned (unnormalized) uv
    std::vector<double> energy_history;       ///< energy after init, then after each sweep
    int sweeps = 0;
    bool converged = false;
    std::array<int, 2> pinned{-1, -1};
    std::vector<int> flipped;
    std::vector<std::string> warnings;
};

/// Half-edge energy 1/2 sum cot(theta_ij) |(u_i - u_j) - L_t (X_i - X_j)|^2 with the
/// clamped cotangents used by the solver.
double arap_energy(const TriSurfaceMesh& mesh, const Eigen::MatrixX2d& uv,
                   std::span<const SimilarityFit<double>> fits);

/// Area form sum A_t |J_t - L_t|_F^2 (equal to arap_energy when no cotangent is clamped).
double arap_energy_area_form(const TriSurfaceMesh& mesh, const Eigen::MatrixX2d& uv,
                             std::span<const SimilarityFit<double>> fits);

/// Local step: per-triangle fit minimising the clamped-cotangent edge energy. Equals the
/// Frobenius fit of the Jacobian when no cotangent is clamped.
std::vector<SimilarityFit<double>> fit_local(const TriSurfaceMesh& mesh, const Eigen::MatrixX2d& uv,
                                             ArapVariant variant);

/// Alternates the local fit with the cotangent-weighted global solve (free boundary,
/// two pinned vertices) until the relative energy change drops below tol.
ArapResult arap_flatten(const TriSurfaceMesh& mesh, const ParamChart& init,
                        const ArapOptions& options = {});

/// Isotropic scale and translation into [0,1]^2 (the longer bbox side maps to 1).
Eigen::MatrixX2d normalize_to_unit_square(const Eigen::MatrixX2d& uv);

/// Faces whose signed parametric area opposes the chart's dominant orientation, or is zero.
std::vector<int> flipped_triangles(const TriSurfaceMesh& mesh, const Eigen::MatrixX2d& uv);

}  // namespace stiffen
