#include "stiffen/prism_fea.hpp"

#include "stiffen/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace stiffen {

ChartAtlas ChartAtlas::single(const TriSurfaceMesh& mesh, const Eigen::MatrixX2d& uv)
{
    if (uv.rows() != mesh.num_vertices()) throw ValidationError("chart does not cover the mesh");
    ChartAtlas a;
    a.face_chart.assign(static_cast<std::size_t>(mesh.num_faces()), 0);
    a.corner_uv.resize(static_cast<std::size_t>(mesh.num_faces()));
    for (int f = 0; f < mesh.num_faces(); ++f)
        for (int k = 0; k < 3; ++k) a.corner_uv[static_cast<std::size_t>(f)].col(k) = uv.row(mesh.corner(f, k)).transpose();
    return a;
}

double PrismModel::design_volume() const
{
    double v = 0.0;
    for (const auto& e : elements)
        if (!e.is_skin) v += e.volume;
    return v;
}

double PrismModel::total_volume() const
{
    double v = 0.0;
    for (const auto& e : elements) v += e.volume;
    return v;
}

Eigen::Matrix<double, 6, 3> PrismModel::element_coords(int e) const
{
    Eigen::Matrix<double, 6, 3> X;
    const auto& el = elements[static_cast<std::size_t>(e)];
    for (int i = 0; i < 6; ++i) X.row(i) = nodes.row(el.nodes[static_cast<std::size_t>(i)]);
    return X;
}

PrismModel extrude_prisms(const TriSurfaceMesh& mesh, const ChartAtlas& atlas, int n_layers, double h_max,
                          double skin, OffsetDirection direction, double E, double nu)
{
    if (n_layers < 1) throw ValidationError("need at least one layer");
    if (!(h_max > 0.0)) throw ValidationError("H_max must be positive");
    if (!(skin >= 0.0)) throw ValidationError("skin thickness must be non-negative");
    if (!(E > 0.0) || !(nu > -1.0 && nu < 0.5)) throw ValidationError("material needs E > 0 and -1 < nu < 0.5");
    if (static_cast<int>(atlas.face_chart.size()) != mesh.num_faces() ||
        static_cast<int>(atlas.corner_uv.size()) != mesh.num_faces())
        throw ValidationError("chart atlas does not cover the mesh");

    PrismModel m;
    m.n_layers = n_layers;
    m.h_max = h_max;
    m.skin = skin;
    m.E = E;
    m.nu = nu;
    if (skin > 0.0) m.levels.push_back(-skin);
    m.surface_level = static_cast<int>(m.levels.size());
    for (int k = 0; k <= n_layers; ++k) m.levels.push_back(h_max * k / n_layers);

    const int nv = mesh.num_vertices();
    m.surface_vertices = nv;
    const Eigen::MatrixX3d normals = mesh.vertex_normals();
    const double sign = direction == OffsetDirection::AlongNormal ? 1.0 : -1.0;
    const auto nlev = static_cast<int>(m.levels.size());
    m.nodes.resize(static_cast<Eigen::Index>(nlev) * nv, 3);
    for (int l = 0; l < nlev; ++l)
        for (int v = 0; v < nv; ++v)
            m.nodes.row(l * nv + v) = mesh.vertices().row(v) + sign * m.levels[static_cast<std::size_t>(l)] * normals.row(v);

    std::vector<int> inverted;
    for (int l = 0; l + 1 < nlev; ++l) {
        const bool is_skin = skin > 0.0 && l == 0;
        const int layer = is_skin ? -1 : l - m.surface_level;
        for (int f = 0; f < mesh.num_faces(); ++f) {
            std::array<int, 3> c{mesh.corner(f, 0), mesh.corner(f, 1), mesh.corner(f, 2)};
            if (direction == OffsetDirection::AgainstNormal) std::swap(c[1], c[2]);
            WedgeElement e;
            for (int i = 0; i < 3; ++i) {
                e.nodes[static_cast<std::size_t>(i)] = l * nv + c[static_cast<std::size_t>(i)];
                e.nodes[static_cast<std::size_t>(i + 3)] = (l + 1) * nv + c[static_cast<std::size_t>(i)];
            }
            e.face = f;
            e.layer = layer;
            e.is_skin = is_skin;
            e.chart = atlas.face_chart[static_cast<std::size_t>(f)];
            e.centroid_uv = atlas.corner_uv[static_cast<std::size_t>(f)].rowwise().mean();
            e.layer_mid = 0.5 * (m.levels[static_cast<std::size_t>(l)] + m.levels[static_cast<std::size_t>(l + 1)]);
            m.elements.push_back(e);
            Eigen::Matrix<double, 6, 3> X;
            for (int i = 0; i < 6; ++i) X.row(i) = m.nodes.row(e.nodes[static_cast<std::size_t>(i)]);
            if ((wedge_jacobian_dets(X).array() <= 0.0).any()) {
                inverted.push_back(f);
                continue;
            }
            m.elements.back().volume = wedge_volume(X);
        }
    }
    if (!inverted.empty()) {
        std::sort(inverted.begin(), inverted.end());
        inverted.erase(std::unique(inverted.begin(), inverted.end()), inverted.end());
        std::ostringstream os;
        os << "offset surfaces self-intersect (inverted wedges) at " << inverted.size() << " triangle(s):";
        for (std::size_t i = 0; i < inverted.size() && i < 20; ++i) os << ' ' << inverted[i];
        if (inverted.size() > 20) os << " ...";
        throw MeshError(os.str());
    }

    m.ke.resize(m.elements.size());
    for (std::size_t e = 0; e < m.elements.size(); ++e)
        m.ke[e] = wedge_stiffness(m.element_coords(static_cast<int>(e)), E, nu);
    m.F = Eigen::VectorXd::Zero(m.num_dofs());
    m.fixed.assign(static_cast<std::size_t>(m.num_dofs()), 0);
    return m;
}

std::vector<int> select_nodes(const PrismModel& model, const Box& box, int level)
{
    std::vector<int> out;
    for (int i = 0; i < model.nodes.rows(); ++i) {
        if (level >= 0 && i / model.surface_vertices != level) continue;
        if (box.contains(model.nodes.row(i).transpose())) out.push_back(i);
    }
    return out;
}

void apply_constraints(PrismModel& model, std::span<const Box> boxes, int level)
{
    if (boxes.empty()) throw ValidationError("no constraint selector given");
    for (std::size_t b = 0; b < boxes.size(); ++b) {
        const auto sel = select_nodes(model, boxes[b], level);
        if (sel.empty()) throw ValidationError("constraint box " + std::to_string(b) + " selects no nodes");
        for (int n : sel)
            for (int d = 0; d < 3; ++d) {
                if (model.F[3 * n + d] != 0.0)
                    throw ValidationError("constraint box " + std::to_string(b) + " fixes loaded node " + std::to_string(n));
                model.fixed[static_cast<std::size_t>(3 * n + d)] = 1;
            }
    }
}

void apply_loads(PrismModel& model, std::span<const LoadSpec> loads, int level)
{
    for (std::size_t b = 0; b < loads.size(); ++b) {
        const auto sel = select_nodes(model, loads[b].box, level);
        if (sel.empty()) throw ValidationError("load box " + std::to_string(b) + " selects no nodes");
        const Eigen::Vector3d share = loads[b].force / static_cast<double>(sel.size());
        for (int n : sel)
            for (int d = 0; d < 3; ++d) {
                if (share[d] != 0.0 && model.fixed[static_cast<std::size_t>(3 * n + d)])
                    throw ValidationError("load box " + std::to_string(b) + " loads a constrained node");
                model.F[3 * n + d] += share[d];
            }
    }
}

Eigen::VectorXd element_densities(const PrismModel& model, std::span<const BSplineHeightField<double>> fields,
                                  double beta)
{
    if (!(beta > 0.0)) throw ValidationError("beta must be positive");
    Eigen::VectorXd rho(static_cast<Eigen::Index>(model.elements.size()));
    for (std::size_t k = 0; k < model.elements.size(); ++k) {
        const auto& e = model.elements[k];
        if (e.is_skin) {
            rho[static_cast<Eigen::Index>(k)] = 1.0;
            continue;
        }
        if (e.chart < 0 || e.chart >= static_cast<int>(fields.size()))
            throw ValidationError("no height field for chart " + std::to_string(e.chart));
        const double h = fields[static_cast<std::size_t>(e.chart)].eval(e.centroid_uv.x(), e.centroid_uv.y());
        rho[static_cast<Eigen::Index>(k)] = heaviside_project(h, e.layer_mid, beta);
    }
    return rho;
}

PrismSolver::PrismSolver(const PrismModel& model) : model_(model)
{
    const int ndof = model.num_dofs();
    free_index_.assign(static_cast<std::size_t>(ndof), -1);
    int nfree = 0;
    for (int d = 0; d < ndof; ++d)
        if (!model.fixed[static_cast<std::size_t>(d)]) free_index_[static_cast<std::size_t>(d)] = nfree++;
    if (nfree == 0) throw ValidationError("every DOF is constrained");

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(model.elements.size() * 171);
    auto dof = [&](const WedgeElement& e, int a) {
        return free_index_[static_cast<std::size_t>(3 * e.nodes[static_cast<std::size_t>(a / 3)] + a % 3)];
    };
    for (const auto& e : model.elements)
        for (int a = 0; a < 18; ++a)
            for (int b = 0; b < 18; ++b) {
                const int i = dof(e, a), j = dof(e, b);
                if (i >= 0 && j >= 0 && i >= j) trip.emplace_back(i, j, 0.0);
            }
    K_.resize(nfree, nfree);
    K_.setFromTriplets(trip.begin(), trip.end());
    K_.makeCompressed();

    scatter_.assign(model.elements.size() * 324, -1);
    const int* outer = K_.outerIndexPtr();
    const int* inner = K_.innerIndexPtr();
    for (std::size_t k = 0; k < model.elements.size(); ++k) {
        const auto& e = model.elements[k];
        for (int a = 0; a < 18; ++a)
            for (int b = 0; b < 18; ++b) {
                const int i = dof(e, a), j = dof(e, b);
                if (i < 0 || j < 0 || i < j) continue;
                const int* pos = std::lower_bound(inner + outer[j], inner + outer[j + 1], i);
                scatter_[k * 324 + static_cast<std::size_t>(18 * a + b)] = static_cast<int>(pos - inner);
            }
    }
    ldlt_ = std::make_unique<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>();
}

PrismSolver::~PrismSolver() = default;

void PrismSolver::assemble(const Eigen::VectorXd& rho)
{
    if (rho.size() != static_cast<Eigen::Index>(model_.elements.size()))
        throw ValidationError("one density per element required");
    double* values = K_.valuePtr();
    std::fill(values, values + K_.nonZeros(), 0.0);
    for (std::size_t k = 0; k < model_.elements.size(); ++k) {
        const double r = rho[static_cast<Eigen::Index>(k)];
        if (!(r >= 0.0 && r <= 1.0)) throw ValidationError("densities must lie in [0, 1]");
        const double s = model_.elements[k].is_skin ? 1.0 : stiffness_scale(r);
        const auto& ke = model_.ke[k];
        const int* slot = &scatter_[k * 324];
        for (int a = 0; a < 18; ++a)
            for (int b = 0; b < 18; ++b)
                if (slot[18 * a + b] >= 0) values[slot[18 * a + b]] += s * ke(a, b);
    }
}

Eigen::SparseMatrix<double> PrismSolver::reduced_stiffness(const Eigen::VectorXd& rho)
{
    assemble(rho);
    return K_;
}

SolveResult PrismSolver::solve(const Eigen::VectorXd& rho, double tolerance)
{
    assemble(rho);
    if (!analyzed_) {
        ldlt_->analyzePattern(K_);
        analyzed_ = true;
    }
    ldlt_->factorize(K_);
    const Eigen::VectorXd& D = ldlt_->vectorD();
    const double dmax = D.cwiseAbs().maxCoeff();
    Eigen::Index worst = 0;
    const double dmin = D.minCoeff(&worst);
    if (ldlt_->info() != Eigen::Success || !(dmin > 1e-13 * dmax))
        throw NumericalError("stiffness matrix is singular or indefinite (smallest pivot " + std::to_string(dmin) +
                             "): constraints leave rigid-body modes unrestrained");

    const int nfree = static_cast<int>(K_.rows());
    Eigen::VectorXd f(nfree);
    for (std::size_t d = 0; d < free_index_.size(); ++d)
        if (free_index_[d] >= 0) f[free_index_[d]] = model_.F[static_cast<Eigen::Index>(d)];
    const Eigen::VectorXd u = ldlt_->solve(f);

    SolveResult out;
    out.free_dofs = nfree;
    out.rho = rho;
    const double fn = f.norm();
    const Eigen::VectorXd r = K_.selfadjointView<Eigen::Lower>() * u - f;
    out.residual = fn > 0.0 ? r.norm() / fn : r.norm();
    if (!std::isfinite(out.residual) || out.residual > tolerance)
        throw NumericalError("linear solve residual " + std::to_string(out.residual) + " exceeds tolerance");
    out.U = Eigen::VectorXd::Zero(model_.num_dofs());
    for (std::size_t d = 0; d < free_index_.size(); ++d)
        if (free_index_[d] >= 0) out.U[static_cast<Eigen::Index>(d)] = u[free_index_[d]];
    out.compliance = 0.5 * model_.F.dot(out.U);
    return out;
}

SolveResult assemble_and_solve(const PrismModel& model, const Eigen::VectorXd& rho)
{
    PrismSolver solver(model);
    return solver.solve(rho);
}

}  // namespace stiffen
