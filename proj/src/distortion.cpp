#include "stiffen/distortion.hpp"

#include "stiffen/error.hpp"
#include "stiffen/mesh_io.hpp"
#include "stiffen/param.hpp"

#include <algorithm>
#include <numbers>
#include <ostream>
#include <set>

namespace stiffen {

namespace {

void check_chart(const TriSurfaceMesh& mesh, const Eigen::MatrixX2d& uv)
{
    if (uv.rows() != mesh.num_vertices())
        throw ValidationError("chart has " + std::to_string(uv.rows()) + " uv rows for " +
                              std::to_string(mesh.num_vertices()) + " vertices");
    if (!uv.allFinite()) throw ValidationError("chart contains non-finite uv");
}

template <typename Vec>
double corner_angle(const Vec& a, const Vec& b)
{
    const double c = a.dot(b);
    double s;
    if constexpr (Vec::RowsAtCompileTime == 3) s = a.cross(b).norm();
    else s = std::abs(a.x() * b.y() - a.y() * b.x());
    return std::atan2(s, c);
}

Eigen::Vector3d surface_angles(const TriSurfaceMesh& mesh, int f)
{
    Eigen::Vector3d out;
    for (int k = 0; k < 3; ++k) {
        const Eigen::Vector3d p = mesh.position(mesh.corner(f, k));
        out[k] = corner_angle(Eigen::Vector3d(mesh.position(mesh.corner(f, (k + 1) % 3)) - p),
                              Eigen::Vector3d(mesh.position(mesh.corner(f, (k + 2) % 3)) - p));
    }
    return out;
}

double uv_area(const TriSurfaceMesh& mesh, const Eigen::MatrixX2d& uv, int f)
{
    return signed_area(face_uv(mesh, uv, f));
}

}  // namespace

std::vector<int> degenerate_uv_triangles(const TriSurfaceMesh& mesh, const Eigen::MatrixX2d& uv)
{
    check_chart(mesh, uv);
    std::vector<int> out;
    for (int f = 0; f < mesh.num_faces(); ++f) {
        const auto U = face_uv(mesh, uv, f);
        double longest = 0.0;
        for (int k = 0; k < 3; ++k) longest = std::max(longest, (U.col((k + 1) % 3) - U.col(k)).squaredNorm());
        const double a = std::abs(signed_area(U));
        if (a == 0.0 || a <= 1e-12 * longest) out.push_back(f);
    }
    return out;
}

Eigen::Vector2d area_angle_distortion(const TriSurfaceMesh& mesh, const Eigen::MatrixX2d& uv)
{
    check_chart(mesh, uv);
    const auto degenerate = degenerate_uv_triangles(mesh, uv);
    const std::set<int> degen(degenerate.begin(), degenerate.end());
    double sum3 = 0.0, sum2 = 0.0;
    std::vector<double> a3(static_cast<std::size_t>(mesh.num_faces())), a2(a3.size());
    for (int f = 0; f < mesh.num_faces(); ++f) {
        a3[static_cast<std::size_t>(f)] = mesh.face_area(f);
        a2[static_cast<std::size_t>(f)] = std::abs(uv_area(mesh, uv, f));
        sum3 += a3[static_cast<std::size_t>(f)];
        sum2 += a2[static_cast<std::size_t>(f)];
    }
    if (!(sum2 > 0.0)) throw NumericalError("chart has zero total area");
    const double two_pi = 2.0 * std::numbers::pi;
    double d_area = 0.0, d_angle = 0.0;
    for (int f = 0; f < mesh.num_faces(); ++f) {
        const double r = a3[static_cast<std::size_t>(f)] / sum3 - a2[static_cast<std::size_t>(f)] / sum2;
        d_area += r * r;
        const Eigen::Vector3d s3 = surface_angles(mesh, f);
        Eigen::Vector3d s2;
        if (degen.count(f)) {
            // Limit convention: the longest side's opposite angle opens to pi.
            const auto U = face_uv(mesh, uv, f);
            int far = 0;
            double best = -1.0;
            for (int k = 0; k < 3; ++k) {
                const double len = (U.col((k + 2) % 3) - U.col((k + 1) % 3)).squaredNorm();
                if (len > best) {
                    best = len;
                    far = k;
                }
            }
            s2.setZero();
            s2[far] = std::numbers::pi;
        } else {
            const auto U = face_uv(mesh, uv, f);
            for (int k = 0; k < 3; ++k)
                s2[k] = corner_angle(Eigen::Vector2d(U.col((k + 1) % 3) - U.col(k)),
                                     Eigen::Vector2d(U.col((k + 2) % 3) - U.col(k)));
        }
        d_angle += ((s3 - s2) / two_pi).squaredNorm();
    }
    return {d_area, d_angle};
}

StretchValues stretch_per_triangle(const TriSurfaceMesh& mesh, const Eigen::MatrixX2d& uv)
{
    check_chart(mesh, uv);
    const auto J = chart_jacobians(mesh, uv);
    StretchValues out;
    const auto n = J.size();
    out.Gamma.resize(n);
    out.gamma.resize(n);
    out.d2.resize(n);
    out.dinf.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
        const Eigen::Vector2d s = singular_values_2x2(J[t]);
        out.Gamma[t] = s[0];
        out.gamma[t] = s[1];
        out.d2[t] = rms_stretch(s[0], s[1]);
        out.dinf[t] = s[0];
    }
    return out;
}

Eigen::Vector2d global_stretch(const TriSurfaceMesh& mesh, const StretchValues& values, std::span<const int> exclude)
{
    const std::set<int> skip(exclude.begin(), exclude.end());
    double num = 0.0, den = 0.0, dinf = 0.0;
    for (int f = 0; f < mesh.num_faces(); ++f) {
        dinf = std::max(dinf, values.dinf[static_cast<std::size_t>(f)]);
        if (skip.count(f)) continue;
        const double a = mesh.face_area(f);
        num += values.d2[static_cast<std::size_t>(f)] * values.d2[static_cast<std::size_t>(f)] * a;
        den += a;
    }
    return {den > 0.0 ? std::sqrt(num / den) : 0.0, dinf};
}

std::vector<double> normalized_stretch(const TriSurfaceMesh& mesh, const Eigen::MatrixX2d& uv)
{
    const auto values = stretch_per_triangle(mesh, uv);
    double sum3 = 0.0, sum2 = 0.0;
    for (int f = 0; f < mesh.num_faces(); ++f) {
        sum3 += mesh.face_area(f);
        sum2 += std::abs(uv_area(mesh, uv, f));
    }
    if (!(sum2 > 0.0)) throw NumericalError("chart has zero total area");
    const double scale = std::sqrt(sum3 / sum2);
    std::vector<double> dt(values.d2.size());
    for (std::size_t t = 0; t < dt.size(); ++t) dt[t] = values.d2[t] * scale;
    return dt;
}

DistortionReport compute_distortion(const TriSurfaceMesh& mesh, const Eigen::MatrixX2d& uv)
{
    DistortionReport r;
    r.stretch = stretch_per_triangle(mesh, uv);
    r.dt = normalized_stretch(mesh, uv);
    r.degenerate = degenerate_uv_triangles(mesh, uv);
    r.flipped = flipped_triangles(mesh, uv);
    const std::set<int> degen(r.degenerate.begin(), r.degenerate.end());
    std::erase_if(r.flipped, [&](int f) { return degen.count(f) > 0; });
    const Eigen::Vector2d aa = area_angle_distortion(mesh, uv);
    r.d_area = aa[0];
    r.d_angle = aa[1];
    const Eigen::Vector2d g = global_stretch(mesh, r.stretch, r.degenerate);
    r.d2_global = g[0];
    r.dinf_global = g[1];
    if (!r.dt.empty()) {
        const auto [lo, hi] = std::minmax_element(r.dt.begin(), r.dt.end());
        r.dt_min = *lo;
        r.dt_max = *hi;
    }
    return r;
}

const char* to_string(GateMode mode)
{
    return mode == GateMode::Planar ? "planar" : "after-seam-cut";
}

const char* to_string(GateVerdict verdict)
{
    switch (verdict) {
    case GateVerdict::Pass: return "pass";
    case GateVerdict::NeedSeamCut: return "need-seam-cut";
    case GateVerdict::NeedMultiChart: return "need-multi-chart";
    }
    return "?";
}

Eigen::Vector2d gate_range(GateMode mode)
{
    return mode == GateMode::Planar ? Eigen::Vector2d(0.5, 2.0) : Eigen::Vector2d(0.25, 4.0);
}

GateDecision quality_gate(std::span<const double> dt, GateMode mode, std::span<const int> invalid)
{
    const Eigen::Vector2d range = gate_range(mode);
    std::set<int> bad(invalid.begin(), invalid.end());
    for (std::size_t t = 0; t < dt.size(); ++t)
        if (!(dt[t] >= range[0] && dt[t] <= range[1])) bad.insert(static_cast<int>(t));
    GateDecision d;
    d.mode = mode;
    d.offending.assign(bad.begin(), bad.end());
    if (!d.offending.empty())
        d.verdict = mode == GateMode::Planar ? GateVerdict::NeedSeamCut : GateVerdict::NeedMultiChart;
    return d;
}

GateDecision quality_gate(const DistortionReport& report, GateMode mode)
{
    std::vector<int> invalid = report.degenerate;
    invalid.insert(invalid.end(), report.flipped.begin(), report.flipped.end());
    return quality_gate(report.dt, mode, invalid);
}

void write_distortion_csv(std::ostream& out, const DistortionReport& report)
{
    out << "triangle,Gamma,gamma,D2,Dinf,Dt\n";
    for (std::size_t t = 0; t < report.dt.size(); ++t)
        out << t << ',' << format_double(report.stretch.Gamma[t]) << ',' << format_double(report.stretch.gamma[t])
            << ',' << format_double(report.stretch.d2[t]) << ',' << format_double(report.stretch.dinf[t]) << ','
            << format_double(report.dt[t]) << '\n';
}

}  // namespace stiffen
