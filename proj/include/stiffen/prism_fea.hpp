#pragma once

#include "stiffen/bspline.hpp"
#include "stiffen/mesh.hpp"

#include <Eigen/Core>
#include <Eigen/LU>
#include <Eigen/SparseCholesky>

#include <array>
#include <memory>
#include <span>
#include <vector>

namespace stiffen {

// ---------------------------------------------------------------------------
// Linear 6-node wedge
// ---------------------------------------------------------------------------

/// Isotropic elasticity in Voigt order (xx, yy, zz, xy, yz, zx), engineering shear.
template <typename Scalar>
Eigen::Matrix<Scalar, 6, 6> isotropic_elasticity(Scalar E, Scalar nu)
{
    const Scalar lambda = E * nu / ((Scalar(1) + nu) * (Scalar(1) - Scalar(2) * nu));
    const Scalar mu = E / (Scalar(2) * (Scalar(1) + nu));
    Eigen::Matrix<Scalar, 6, 6> D = Eigen::Matrix<Scalar, 6, 6>::Zero();
    D.template topLeftCorner<3, 3>().setConstant(lambda);
    for (int i = 0; i < 3; ++i) {
        D(i, i) += Scalar(2) * mu;
        D(i + 3, i + 3) = mu;
    }
    return D;
}

/// Wedge shape functions at natural coordinates (r, s) in the unit triangle, t in [-1, 1].
/// Nodes 0-2 form the bottom (t = -1), nodes 3-5 the top.
template <typename Scalar>
Eigen::Matrix<Scalar, 6, 1> wedge_shape(Scalar r, Scalar s, Scalar t)
{
    const Scalar L[3] = {Scalar(1) - r - s, r, s};
    Eigen::Matrix<Scalar, 6, 1> N;
    for (int i = 0; i < 3; ++i) {
        N[i] = L[i] * (Scalar(1) - t) / Scalar(2);
        N[i + 3] = L[i] * (Scalar(1) + t) / Scalar(2);
    }
    return N;
}

/// Natural derivatives: rows d/dr, d/ds, d/dt; one column per node.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 6> wedge_shape_gradients(Scalar r, Scalar s, Scalar t)
{
    const Scalar L[3] = {Scalar(1) - r - s, r, s};
    const Scalar dLdr[3] = {Scalar(-1), Scalar(1), Scalar(0)};
    const Scalar dLds[3] = {Scalar(-1), Scalar(0), Scalar(1)};
    Eigen::Matrix<Scalar, 3, 6> G;
    for (int i = 0; i < 3; ++i) {
        const Scalar lo = (Scalar(1) - t) / Scalar(2), hi = (Scalar(1) + t) / Scalar(2);
        G(0, i) = dLdr[i] * lo;
        G(1, i) = dLds[i] * lo;
        G(2, i) = -L[i] / Scalar(2);
        G(0, i + 3) = dLdr[i] * hi;
        G(1, i + 3) = dLds[i] * hi;
        G(2, i + 3) = L[i] / Scalar(2);
    }
    return G;
}

/// 3-point triangle rule times 2-point Gauss line rule: (r, s, t, weight).
template <typename Scalar>
std::array<Eigen::Matrix<Scalar, 4, 1>, 6> wedge_quadrature()
{
    using std::sqrt;
    const Scalar a = Scalar(1) / Scalar(6), b = Scalar(2) / Scalar(3);
    const Scalar g = Scalar(1) / sqrt(Scalar(3));
    const Scalar rs[3][2] = {{a, a}, {b, a}, {a, b}};
    std::array<Eigen::Matrix<Scalar, 4, 1>, 6> pts;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 2; ++j) pts[static_cast<std::size_t>(2 * i + j)] << rs[i][0], rs[i][1], j ? g : -g, a;
    return pts;
}

/// Jacobian determinants at the six quadrature points (X: one node per row).
template <typename Scalar>
Eigen::Matrix<Scalar, 6, 1> wedge_jacobian_dets(const Eigen::Matrix<Scalar, 6, 3>& X)
{
    Eigen::Matrix<Scalar, 6, 1> d;
    const auto q = wedge_quadrature<Scalar>();
    for (int g = 0; g < 6; ++g) {
        const auto& p = q[static_cast<std::size_t>(g)];
        d[g] = (wedge_shape_gradients(p[0], p[1], p[2]) * X).determinant();
    }
    return d;
}

template <typename Scalar>
Scalar wedge_volume(const Eigen::Matrix<Scalar, 6, 3>& X)
{
    const auto q = wedge_quadrature<Scalar>();
    const auto d = wedge_jacobian_dets(X);
    Scalar v(0);
    for (int g = 0; g < 6; ++g) v += d[g] * q[static_cast<std::size_t>(g)][3];
    return v;
}

/// 6x18 strain-displacement matrix; DOFs ordered node-major (x, y, z).
template <typename Scalar>
Eigen::Matrix<Scalar, 6, 18> wedge_strain_matrix(const Eigen::Matrix<Scalar, 6, 3>& X, Scalar r, Scalar s, Scalar t,
                                                 Scalar* det_out = nullptr)
{
    const Eigen::Matrix<Scalar, 3, 6> G = wedge_shape_gradients(r, s, t);
    const Eigen::Matrix<Scalar, 3, 3> J = G * X;
    const Scalar det = J.determinant();
    if (det_out) *det_out = det;
    const Eigen::Matrix<Scalar, 3, 6> dN = J.inverse() * G;  // rows d/dx, d/dy, d/dz
    Eigen::Matrix<Scalar, 6, 18> B = Eigen::Matrix<Scalar, 6, 18>::Zero();
    for (int i = 0; i < 6; ++i) {
        const Scalar dx = dN(0, i), dy = dN(1, i), dz = dN(2, i);
        B(0, 3 * i) = dx;
        B(1, 3 * i + 1) = dy;
        B(2, 3 * i + 2) = dz;
        B(3, 3 * i) = dy;
        B(3, 3 * i + 1) = dx;
        B(4, 3 * i + 1) = dz;
        B(4, 3 * i + 2) = dy;
        B(5, 3 * i) = dz;
        B(5, 3 * i + 2) = dx;
    }
    return B;
}

/// Element stiffness sum_g B^T D B det w. Throws MeshError on a non-positive Jacobian.
template <typename Scalar>
Eigen::Matrix<Scalar, 18, 18> wedge_stiffness(const Eigen::Matrix<Scalar, 6, 3>& X, Scalar E, Scalar nu)
{
    const Eigen::Matrix<Scalar, 6, 6> D = isotropic_elasticity(E, nu);
    Eigen::Matrix<Scalar, 18, 18> K = Eigen::Matrix<Scalar, 18, 18>::Zero();
    for (const auto& p : wedge_quadrature<Scalar>()) {
        Scalar det(0);
        const auto B = wedge_strain_matrix(X, p[0], p[1], p[2], &det);
        if (!(det > Scalar(0))) throw MeshError("inverted wedge element (non-positive Jacobian)");
        K.noalias() += B.transpose() * D * B * (det * p[3]);
    }
    return Scalar(0.5) * (K + K.transpose());
}

// ---------------------------------------------------------------------------
// Layered prism model
// ---------------------------------------------------------------------------

/// Per parent-mesh face: the chart it belongs to and its corner uv in that chart.
struct ChartAtlas {
    std::vector<int> face_chart;
    std::vector<Eigen::Matrix<double, 2, 3>> corner_uv;

    /// Single chart covering the mesh, uv indexed by vertex.
    static ChartAtlas single(const TriSurfaceMesh& mesh, const Eigen::MatrixX2d& uv);
};

enum class OffsetDirection { AlongNormal, AgainstNormal };

struct WedgeElement {
    std::array<int, 6> nodes{};
    int face = 0;          ///< surface triangle it was extruded from
    int layer = 0;         ///< 0..L-1 for design elements, -1 for skin
    bool is_skin = false;
    int chart = 0;
    Eigen::Vector2d centroid_uv = Eigen::Vector2d::Zero();
    double layer_mid = 0.0;
    double volume = 0.0;
};

struct Box {
    Eigen::Vector3d lo;
    Eigen::Vector3d hi;
    bool contains(const Eigen::Vector3d& p) const
    {
        return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
    }
};

struct LoadSpec {
    Box box;
    Eigen::Vector3d force;  ///< total, shared equally by the selected nodes
};

struct PrismModel {
    Eigen::MatrixX3d nodes;
    std::vector<WedgeElement> elements;
    std::vector<double> levels;  ///< offset of each node level from the surface
    int surface_vertices = 0;    ///< nodes per level; node = level * surface_vertices + vertex
    int surface_level = 0;       ///< level holding the surface itself
    int n_layers = 0;
    double h_max = 0.0;
    double skin = 0.0;
    double E = 1.0;
    double nu = 0.3;
    Eigen::VectorXd F;                 ///< nodal forces, 3 per node
    std::vector<char> fixed;           ///< per DOF
    std::vector<Eigen::Matrix<double, 18, 18>> ke;  ///< unscaled element stiffness

    int num_dofs() const { return 3 * static_cast<int>(nodes.rows()); }
    double design_volume() const;  ///< V0, skin excluded
    double total_volume() const;
    Eigen::Matrix<double, 6, 3> element_coords(int e) const;
};

/// Surface nodes offset along area-weighted vertex normals at {-skin, 0, H/L, ..., H}
/// (the skin level only when skin > 0; against the normal for AgainstNormal).
/// Throws MeshError listing faces whose wedges invert.
PrismModel extrude_prisms(const TriSurfaceMesh& mesh, const ChartAtlas& atlas, int n_layers, double h_max,
                          double skin, OffsetDirection direction, double E, double nu);

/// Nodes inside the box, optionally restricted to one node level.
std::vector<int> select_nodes(const PrismModel& model, const Box& box, int level = -1);

/// Fixes all three DOFs of every node in each box. Throws ValidationError on an empty
/// selection or when a selected DOF already carries load.
void apply_constraints(PrismModel& model, std::span<const Box> boxes, int level = -1);
/// Adds each load spread equally over its selected nodes. Throws ValidationError on an
/// empty selection or a load touching a fixed DOF.
void apply_loads(PrismModel& model, std::span<const LoadSpec> loads, int level = -1);

/// rho = 1 for skin, the projected field height otherwise. One field per chart.
Eigen::VectorXd element_densities(const PrismModel& model, std::span<const BSplineHeightField<double>> fields,
                                  double beta);

inline constexpr double kRhoMin = 1e-6;

struct SolveResult {
    Eigen::VectorXd U;
    double compliance = 0.0;
    double residual = 0.0;   ///< |K U - F| / |F|
    int free_dofs = 0;
    Eigen::VectorXd rho;     ///< densities the solve used
};

/// Reusable solver: the sparsity pattern and its ordering are computed once.
class PrismSolver {
public:
    explicit PrismSolver(const PrismModel& model);
    ~PrismSolver();
    PrismSolver(const PrismSolver&) = delete;
    PrismSolver& operator=(const PrismSolver&) = delete;

    /// K = sum (rho_min + (1 - rho_min) rho_k) k_k over design elements + sum k_k over skin.
    SolveResult solve(const Eigen::VectorXd& rho, double tolerance = 1e-8);

    /// Reduced stiffness on the free DOFs (lower triangle stored), for tests.
    Eigen::SparseMatrix<double> reduced_stiffness(const Eigen::VectorXd& rho);
    const std::vector<int>& free_index() const { return free_index_; }

private:
    void assemble(const Eigen::VectorXd& rho);

    const PrismModel& model_;
    std::vector<int> free_index_;       ///< per DOF, -1 when fixed
    Eigen::SparseMatrix<double> K_;     ///< lower triangle of the free-free block
    std::vector<int> scatter_;          ///< per element 18x18 entry, slot in K_ or -1
    std::unique_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> ldlt_;
    bool analyzed_ = false;
};

/// Convenience: one-off solve.
SolveResult assemble_and_solve(const PrismModel& model, const Eigen::VectorXd& rho);

/// Scale factor applied to design element stiffness.
inline double stiffness_scale(double rho) { return kRhoMin + (1.0 - kRhoMin) * rho; }

}  // namespace stiffen
