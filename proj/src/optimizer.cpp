#include "stiffen/optimizer.hpp"

#include "stiffen/error.hpp"
#include "stiffen/mesh_io.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace stiffen {

DesignSpace::DesignSpace(const PrismModel& model, std::span<const BSplineHeightField<double>> fields)
    : model_(model), templates_(fields.begin(), fields.end())
{
    if (templates_.empty()) throw ValidationError("at least one height field is required");
    h_max_ = templates_.front().h_max();
    int total = 0;
    for (const auto& f : templates_) {
        if (f.h_max() != h_max_) throw ValidationError("all charts must share H_max");
        offset_.push_back(total);
        total += f.n() * f.m();
    }
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t k = 0; k < model.elements.size(); ++k) {
        const auto& e = model.elements[k];
        if (e.is_skin) continue;
        if (e.chart < 0 || e.chart >= static_cast<int>(templates_.size()))
            throw ValidationError("no height field for chart " + std::to_string(e.chart));
        const auto& field = templates_[static_cast<std::size_t>(e.chart)];
        const auto b = field.weights_at(e.centroid_uv.x(), e.centroid_uv.y());
        for (int a = 0; a < b.w.rows(); ++a)
            for (int c = 0; c < b.w.cols(); ++c)
                if (b.w(a, c) != 0.0)
                    trip.emplace_back(static_cast<int>(k),
                                      offset_[static_cast<std::size_t>(e.chart)] + (b.i0 + a) * field.m() + b.j0 + c,
                                      b.w(a, c));
    }
    W_.resize(static_cast<Eigen::Index>(model.elements.size()), total);
    W_.setFromTriplets(trip.begin(), trip.end());
    W_.makeCompressed();
}

Eigen::VectorXd DesignSpace::pack(std::span<const BSplineHeightField<double>> fields) const
{
    if (fields.size() != templates_.size()) throw ValidationError("chart count mismatch");
    Eigen::VectorXd x(size());
    for (std::size_t c = 0; c < fields.size(); ++c) {
        const auto& f = fields[c];
        if (f.n() != templates_[c].n() || f.m() != templates_[c].m()) throw ValidationError("control grid shape mismatch");
        for (int i = 0; i < f.n(); ++i)
            for (int j = 0; j < f.m(); ++j) x[offset_[c] + i * f.m() + j] = f.control()(i, j);
    }
    return x;
}

std::vector<BSplineHeightField<double>> DesignSpace::unpack(const Eigen::VectorXd& x) const
{
    if (x.size() != size()) throw ValidationError("design vector size mismatch");
    auto out = templates_;
    for (std::size_t c = 0; c < out.size(); ++c) {
        Eigen::MatrixXd grid(out[c].n(), out[c].m());
        for (int i = 0; i < grid.rows(); ++i)
            for (int j = 0; j < grid.cols(); ++j) grid(i, j) = x[offset_[c] + i * grid.cols() + j];
        out[c].set_control(grid);
    }
    return out;
}

Eigen::VectorXd DesignSpace::element_heights(const Eigen::VectorXd& x) const
{
    if (x.size() != size()) throw ValidationError("design vector size mismatch");
    return W_ * x;
}

Eigen::VectorXd design_densities(const PrismModel& model, const DesignSpace& space, const Eigen::VectorXd& x,
                                 double beta)
{
    const Eigen::VectorXd h = space.element_heights(x);
    Eigen::VectorXd rho(h.size());
    for (Eigen::Index k = 0; k < h.size(); ++k) {
        const auto& e = model.elements[static_cast<std::size_t>(k)];
        rho[k] = e.is_skin ? 1.0 : heaviside_project(h[k], e.layer_mid, beta);
    }
    return rho;
}

Eigen::VectorXd compliance_sensitivity(const PrismModel& model, const SolveResult& solution,
                                       const DesignSpace& space, const Eigen::VectorXd& x, double beta)
{
    const Eigen::VectorXd rho = design_densities(model, space, x, beta);
    if (solution.rho.size() != rho.size() || !(solution.rho.array() == rho.array()).all())
        throw StaleStateError("displacements were computed for a different design; solve again first");
    const Eigen::VectorXd h = space.element_heights(x);
    Eigen::VectorXd dh = Eigen::VectorXd::Zero(h.size());
    for (std::size_t k = 0; k < model.elements.size(); ++k) {
        const auto& e = model.elements[k];
        if (e.is_skin) continue;
        Eigen::Matrix<double, 18, 1> u;
        for (int i = 0; i < 6; ++i) u.segment<3>(3 * i) = solution.U.segment<3>(3 * e.nodes[static_cast<std::size_t>(i)]);
        const double energy = u.dot(model.ke[k] * u);
        const auto kk = static_cast<Eigen::Index>(k);
        dh[kk] = -0.5 * (1.0 - kRhoMin) * heaviside_derivative(h[kk], e.layer_mid, beta) * energy;
    }
    return space.weights().transpose() * dh;
}

VolumeState volume_and_sensitivity(const PrismModel& model, const DesignSpace& space, const Eigen::VectorXd& x,
                                   double beta, double target)
{
    const double V0 = model.design_volume();
    if (!(V0 > 0.0)) throw ValidationError("model has no design volume");
    const Eigen::VectorXd h = space.element_heights(x);
    double v = 0.0;
    Eigen::VectorXd dh = Eigen::VectorXd::Zero(h.size());
    for (std::size_t k = 0; k < model.elements.size(); ++k) {
        const auto& e = model.elements[k];
        if (e.is_skin) continue;
        const auto kk = static_cast<Eigen::Index>(k);
        v += heaviside_project(h[kk], e.layer_mid, beta) * e.volume;
        dh[kk] = heaviside_derivative(h[kk], e.layer_mid, beta) * e.volume / V0;
    }
    return {v / V0 - target, space.weights().transpose() * dh};
}

UpdateResult update_design(const Eigen::VectorXd& x, const Eigen::VectorXd& dC, const Eigen::VectorXd& dg,
                           double g, const UpdateOptions& o)
{
    if (dC.size() != x.size() || dg.size() != x.size()) throw ValidationError("gradient shape mismatch");
    UpdateResult r;
    auto constraint = [&](const Eigen::VectorXd& y) {
        return o.constraint ? o.constraint(y) : g + dg.dot(y - x);
    };
    if (o.moves.size() != 0 && o.moves.size() != x.size()) throw ValidationError("move limit shape mismatch");
    if ((dC.array() == 0.0).all()) {
        r.x = x;
        r.constraint = constraint(x);
        return r;
    }
    if (g > 0.0 && (dg.array() == 0.0).all())
        throw ValidationError("volume constraint violated but insensitive to every design variable");

    const double span = o.upper - o.lower;
    const double floor = o.lower + 1e-3 * span;
    Eigen::VectorXd lo(x.size()), hi(x.size()), base(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double move = o.moves.size() != 0 ? o.moves[i] : o.move;
        lo[i] = move > 0.0 ? std::max(o.lower, x[i] - move) : o.lower;
        hi[i] = move > 0.0 ? std::min(o.upper, x[i] + move) : o.upper;
        base[i] = std::max(x[i], floor);
    }
    auto candidate = [&](double lambda) {
        Eigen::VectorXd y(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double ratio = std::max(0.0, -dC[i]) / (lambda * std::max(0.0, dg[i]) + o.epsilon);
            y[i] = std::clamp(base[i] * std::pow(ratio, o.exponent), lo[i], hi[i]);
        }
        return y;
    };

    double l1 = 1e-40, l2 = 1e40;
    Eigen::VectorXd y = candidate(l1);
    double c = constraint(y);
    if (c <= 0.0) {
        r.x = std::move(y);
        r.lambda = l1;
        r.constraint = c;
        return r;
    }
    Eigen::VectorXd best = candidate(l2);
    double cbest = constraint(best);
    double lbest = l2;
    for (r.bisections = 0; r.bisections < o.max_bisections && cbest <= 0.0; ++r.bisections) {
        if (l2 / l1 - 1.0 < 1e-14 || cbest == 0.0) break;
        const double mid = std::sqrt(l1 * l2);
        y = candidate(mid);
        c = constraint(y);
        if (c > 0.0) {
            l1 = mid;
        } else {
            l2 = mid;
            best = y;
            cbest = c;
            lbest = mid;
        }
    }
    r.x = std::move(best);
    r.lambda = lbest;
    r.constraint = cbest;
    return r;
}

double layer_thickness(const PrismModel& model)
{
    return model.h_max / model.n_layers;
}

double uniform_height_for_volume(const PrismModel& model, const DesignSpace& space, double beta, double target)
{
    const double H = space.h_max();
    auto g = [&](double h) {
        return volume_and_sensitivity(model, space, Eigen::VectorXd::Constant(space.size(), h), beta, target).g;
    };
    if (g(H) <= 0.0) return H;
    if (g(0.0) >= 0.0) return 0.0;
    double a = 0.0, b = H;
    for (int it = 0; it < 200 && b - a > 1e-15 * H; ++it) {
        const double mid = 0.5 * (a + b);
        (g(mid) > 0.0 ? b : a) = mid;
    }
    return 0.5 * (a + b);
}

Baseline uniform_baseline(const PrismModel& model, const DesignSpace& space, double beta, double target)
{
    Baseline b;
    b.height = uniform_height_for_volume(model, space, beta, target);
    const Eigen::VectorXd x = Eigen::VectorXd::Constant(space.size(), b.height);
    b.compliance = assemble_and_solve(model, design_densities(model, space, x, beta)).compliance;
    b.volume_fraction = volume_and_sensitivity(model, space, x, beta, 0.0).g;
    return b;
}

OptState optimize(const OptProblem& problem, const std::function<void(const OptState&)>& on_iteration)
{
    if (!problem.model) throw ValidationError("optimization problem has no model");
    const PrismModel& model = *problem.model;
    const OptSettings& s = problem.settings;
    if (!(s.volume_fraction > 0.0 && s.volume_fraction <= 1.0)) throw ValidationError("volume fraction must lie in (0, 1]");
    if (s.max_iters < 1 || s.window < 1) throw ValidationError("max_iters and window must be positive");
    if (!(s.move_fraction > 0.0)) throw ValidationError("move limit must be positive");
    if (!(s.beta_start > 0.0) || s.beta_cap < s.beta_start) throw ValidationError("need 0 < beta_start <= beta_cap");
    if (!(model.F.array() != 0.0).any()) throw ValidationError("model carries no load");

    DesignSpace space(model, problem.fields);
    const double lt = layer_thickness(model);
    const double beta_cap = s.beta_cap / lt;
    OptState st;
    st.beta = s.beta_start / lt;
    st.x = Eigen::VectorXd::Constant(space.size(), uniform_height_for_volume(model, space, st.beta, s.volume_fraction));

    UpdateOptions uo;
    uo.move = s.move_fraction * space.h_max();
    uo.lower = 0.0;
    uo.upper = space.h_max();

    const double full_move = uo.move;
    Eigen::VectorXd last_step = Eigen::VectorXd::Zero(space.size());
    if (s.adaptive_move) uo.moves = Eigen::VectorXd::Constant(space.size(), full_move);

    PrismSolver solver(model);
    double last_change = 0.0;
    int stable = 0;
    int since_beta = 0;
    for (int it = 0;; ++it) {
        st.rho = design_densities(model, space, st.x, st.beta);
        try {
            st.solution = solver.solve(st.rho);
        } catch (const NumericalError& e) {
            throw NumericalError("iteration " + std::to_string(it) + ": " + e.what());
        }
        const double prev = st.history.empty() ? 0.0 : st.history.back().compliance;
        st.compliance = st.solution.compliance;
        st.dC = compliance_sensitivity(model, st.solution, space, st.x, st.beta);
        const auto vol = volume_and_sensitivity(model, space, st.x, st.beta, s.volume_fraction);
        st.g = vol.g;
        st.dg = vol.dg;
        st.history.push_back({it, st.compliance, st.g + s.volume_fraction, st.beta, last_change});
        if (on_iteration) on_iteration(st);

        if (it > 0 && std::abs(st.compliance - prev) <= s.tol * std::abs(st.compliance)) ++stable;
        else stable = 0;
        const bool settled = stable >= s.window && st.g <= s.g_tol;
        const bool at_cap = s.beta_every <= 0 || st.beta >= beta_cap;
        if (settled && at_cap) {
            st.converged = true;
            break;
        }
        if (it + 1 >= s.max_iters) break;

        ++since_beta;
        const double beta_next =
            (!at_cap && (settled || since_beta >= s.beta_every)) ? std::min(2.0 * st.beta, beta_cap) : st.beta;
        if (beta_next != st.beta) {
            since_beta = 0;
            stable = 0;
        }
        if (s.exact_volume)
            uo.constraint = [&, beta_next](const Eigen::VectorXd& y) {
                return volume_and_sensitivity(model, space, y, beta_next, s.volume_fraction).g;
            };
        const auto up = update_design(st.x, st.dC, st.dg, st.g, uo);
        const Eigen::VectorXd step = up.x - st.x;
        last_change = step.cwiseAbs().maxCoeff();
        if (s.adaptive_move)
            for (Eigen::Index i = 0; i < step.size(); ++i) {
                const double turn = step[i] * last_step[i];
                if (turn < 0.0) uo.moves[i] = std::max(0.5 * uo.moves[i], 1e-3 * full_move);
                else if (turn > 0.0) uo.moves[i] = std::min(1.2 * uo.moves[i], full_move);
            }
        last_step = step;
        st.x = up.x;
        st.beta = beta_next;
    }
    return st;
}

void write_history_csv(std::ostream& out, std::span<const HistoryRow> history)
{
    out << "iteration,compliance,volume_fraction,beta,max_change\n";
    for (const auto& r : history)
        out << r.iteration << ',' << format_double(r.compliance) << ',' << format_double(r.volume_fraction) << ','
            << format_double(r.beta) << ',' << format_double(r.max_change) << '\n';
}

}  // namespace stiffen
