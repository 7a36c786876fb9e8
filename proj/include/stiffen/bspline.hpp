#pragma once

#include "stiffen/error.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <iosfwd>
#include <string>
#include <vector>

namespace stiffen {

/// Open-uniform knots on [0,1] for n basis functions of degree p: p+1 zeros, the
/// interior i/(n-p), p+1 ones.
template <typename Scalar = double>
std::vector<Scalar> clamped_knots(int n, int p)
{
    if (p < 0 || n < p + 1) throw ValidationError("clamped knots need n >= p + 1 and p >= 0");
    std::vector<Scalar> k(static_cast<std::size_t>(n + p + 1));
    for (int i = 0; i <= p; ++i) {
        k[static_cast<std::size_t>(i)] = Scalar(0);
        k[static_cast<std::size_t>(n + i)] = Scalar(1);
    }
    for (int i = 1; i < n - p; ++i) k[static_cast<std::size_t>(p + i)] = Scalar(i) / Scalar(n - p);
    return k;
}

/// Throws ValidationError unless the knots are non-decreasing with p+1 repeated ends at 0 and 1.
template <typename Scalar>
void validate_clamped_knots(const std::vector<Scalar>& knots, int p)
{
    const int len = static_cast<int>(knots.size());
    if (p < 0 || len < 2 * (p + 1)) throw ValidationError("knot vector too short for degree " + std::to_string(p));
    for (int i = 1; i < len; ++i)
        if (knots[static_cast<std::size_t>(i)] < knots[static_cast<std::size_t>(i - 1)])
            throw ValidationError("knot vector must be non-decreasing");
    for (int i = 0; i <= p; ++i)
        if (knots[static_cast<std::size_t>(i)] != Scalar(0) || knots[static_cast<std::size_t>(len - 1 - i)] != Scalar(1))
            throw ValidationError("knot vector must be clamped on [0, 1]");
}

/// Parameter checked against [0,1]; values within 1e-12 outside are snapped onto the ends.
template <typename Scalar>
Scalar checked_parameter(Scalar t)
{
    if (!(t >= Scalar(-1e-12) && t <= Scalar(1) + Scalar(1e-12)))
        throw ValidationError("parameter outside [0, 1]");
    return std::clamp(t, Scalar(0), Scalar(1));
}

/// Index s with knots[s] <= t < knots[s+1]; the last non-empty span at t = 1.
template <typename Scalar>
int find_span(const std::vector<Scalar>& knots, int p, Scalar t)
{
    const int n = static_cast<int>(knots.size()) - p - 1;
    if (t >= knots[static_cast<std::size_t>(n)]) {
        int s = n - 1;
        while (s > p && knots[static_cast<std::size_t>(s)] == knots[static_cast<std::size_t>(s + 1)]) --s;
        return s;
    }
    const auto it = std::upper_bound(knots.begin() + p, knots.begin() + n + 1, t);
    return static_cast<int>(it - knots.begin()) - 1;
}

/// The p+1 basis values N_{s-p..s, p}(t) that can be non-zero in span s (Cox-de Boor
/// recursion in triangular form; 0/0 terms drop out).
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> nonzero_basis(const std::vector<Scalar>& knots, int p, int span, Scalar t)
{
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> N(p + 1), left(p + 1), right(p + 1);
    N[0] = Scalar(1);
    for (int j = 1; j <= p; ++j) {
        left[j] = t - knots[static_cast<std::size_t>(span + 1 - j)];
        right[j] = knots[static_cast<std::size_t>(span + j)] - t;
        Scalar saved(0);
        for (int r = 0; r < j; ++r) {
            const Scalar den = right[r + 1] + left[j - r];
            const Scalar tmp = den == Scalar(0) ? Scalar(0) : N[r] / den;
            N[r] = saved + right[r + 1] * tmp;
            saved = left[j - r] * tmp;
        }
        N[j] = saved;
    }
    return N;
}

/// All n basis values at t.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> basis_eval(const std::vector<Scalar>& knots, int p, Scalar t)
{
    validate_clamped_knots(knots, p);
    t = checked_parameter(t);
    const int n = static_cast<int>(knots.size()) - p - 1;
    const int span = find_span(knots, p, t);
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(n);
    out.segment(span - p, p + 1) = nonzero_basis(knots, p, span, t);
    return out;
}

/// Tensor-product weights N_i(u) N_j(v) on the active (p+1) x (q+1) block starting at (i0, j0).
template <typename Scalar>
struct BasisBlock {
    int i0 = 0;
    int j0 = 0;
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> w;
};

/// Stiffener height over one chart: h(u,v) = sum_ij N_i,p(u) N_j,q(v) c_ij.
template <typename Scalar = double>
class BSplineHeightField {
public:
    using Grid = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    BSplineHeightField() = default;

    /// Clamped open-uniform knots, all control heights set to `initial`.
    BSplineHeightField(int p, int q, int n, int m, Scalar h_max, Scalar initial = Scalar(0), int chart_id = 0)
        : p_(p), q_(q), knots_u_(clamped_knots<Scalar>(n, p)), knots_v_(clamped_knots<Scalar>(m, q)),
          control_(Grid::Constant(n, m, initial)), h_max_(h_max), chart_id_(chart_id)
    {
        validate();
    }

    BSplineHeightField(int p, int q, std::vector<Scalar> knots_u, std::vector<Scalar> knots_v, Grid control,
                       Scalar h_max, int chart_id = 0)
        : p_(p), q_(q), knots_u_(std::move(knots_u)), knots_v_(std::move(knots_v)), control_(std::move(control)),
          h_max_(h_max), chart_id_(chart_id)
    {
        validate();
    }

    int p() const { return p_; }
    int q() const { return q_; }
    int n() const { return static_cast<int>(control_.rows()); }
    int m() const { return static_cast<int>(control_.cols()); }
    Scalar h_max() const { return h_max_; }
    int chart_id() const { return chart_id_; }
    const std::vector<Scalar>& knots_u() const { return knots_u_; }
    const std::vector<Scalar>& knots_v() const { return knots_v_; }
    const Grid& control() const { return control_; }

    /// Replaces the control heights; throws unless same shape and within [0, h_max].
    void set_control(const Grid& c)
    {
        if (c.rows() != control_.rows() || c.cols() != control_.cols())
            throw ValidationError("control grid shape mismatch");
        check_bounds(c);
        control_ = c;
    }

    BasisBlock<Scalar> weights_at(Scalar u, Scalar v) const
    {
        u = checked_parameter(u);
        v = checked_parameter(v);
        const int su = find_span(knots_u_, p_, u), sv = find_span(knots_v_, q_, v);
        BasisBlock<Scalar> b;
        b.i0 = su - p_;
        b.j0 = sv - q_;
        b.w = nonzero_basis(knots_u_, p_, su, u) * nonzero_basis(knots_v_, q_, sv, v).transpose();
        return b;
    }

    Scalar eval(Scalar u, Scalar v) const
    {
        const auto b = weights_at(u, v);
        return b.w.cwiseProduct(control_.block(b.i0, b.j0, p_ + 1, q_ + 1)).sum();
    }

    void validate() const
    {
        validate_clamped_knots(knots_u_, p_);
        validate_clamped_knots(knots_v_, q_);
        if (static_cast<int>(knots_u_.size()) != n() + p_ + 1 || static_cast<int>(knots_v_.size()) != m() + q_ + 1)
            throw ValidationError("knot vector length must be n + p + 1 (resp. m + q + 1)");
        if (!(h_max_ > Scalar(0))) throw ValidationError("H_max must be positive");
        check_bounds(control_);
    }

private:
    void check_bounds(const Grid& c) const
    {
        if (!c.allFinite() || (c.size() > 0 && (c.minCoeff() < Scalar(0) || c.maxCoeff() > h_max_)))
            throw ValidationError("control heights must lie in [0, H_max]");
    }

    int p_ = 3;
    int q_ = 3;
    std::vector<Scalar> knots_u_;
    std::vector<Scalar> knots_v_;
    Grid control_;
    Scalar h_max_ = Scalar(1);
    int chart_id_ = 0;
};

/// Logistic projection e^x / (1 + e^x), x = beta (h - mid), exponent clamped to [-500, 500].
template <typename Scalar>
Scalar heaviside_project(Scalar h, Scalar mid, Scalar beta)
{
    using std::exp;
    const Scalar x = std::clamp(beta * (h - mid), Scalar(-500), Scalar(500));
    if (x >= Scalar(0)) return Scalar(1) / (Scalar(1) + exp(-x));
    const Scalar e = exp(x);
    return e / (Scalar(1) + e);
}

/// d rho / d h = beta rho (1 - rho), evaluated without cancellation.
template <typename Scalar>
Scalar heaviside_derivative(Scalar h, Scalar mid, Scalar beta)
{
    using std::abs;
    using std::exp;
    const Scalar x = std::clamp(beta * (h - mid), Scalar(-500), Scalar(500));
    const Scalar s = exp(-abs(x));
    return beta * s / ((Scalar(1) + s) * (Scalar(1) + s));
}

/// Text format: header line `bspline p q n m H_max chart`, the two knot vectors on one
/// line each, then n rows of m control heights. Doubles use the shortest exact form.
void write_field(std::ostream& out, const BSplineHeightField<double>& field);
BSplineHeightField<double> read_field(std::istream& in);
void write_field_file(const std::string& path, const BSplineHeightField<double>& field);
BSplineHeightField<double> read_field_file(const std::string& path);

}  // namespace stiffen
