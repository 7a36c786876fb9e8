#pragma once

#include "stiffen/mesh.hpp"

#include <Eigen/Core>

#include <cmath>
#include <iosfwd>
#include <span>
#include <vector>

namespace stiffen {

/// Singular values (largest, smallest) of a 2x2 matrix in closed form.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, 2, 1> singular_values_2x2(const Eigen::MatrixBase<Derived>& J)
{
    using Scalar = typename Derived::Scalar;
    using std::abs;
    using std::hypot;
    const Scalar e = (J(0, 0) + J(1, 1)) / 2, f = (J(0, 0) - J(1, 1)) / 2;
    const Scalar g = (J(1, 0) + J(0, 1)) / 2, h = (J(1, 0) - J(0, 1)) / 2;
    const Scalar q = hypot(e, h), r = hypot(f, g);
    return {q + r, abs(q - r)};
}

/// Root-mean-square stretch sqrt((G^2 + g^2) / 2).
template <typename Scalar>
Scalar rms_stretch(Scalar Gamma, Scalar gamma)
{
    using std::sqrt;
    return sqrt((Gamma * Gamma + gamma * gamma) / Scalar(2));
}

struct StretchValues {
    std::vector<double> Gamma;  ///< largest singular value of J_t
    std::vector<double> gamma;  ///< smallest singular value of J_t
    std::vector<double> d2;
    std::vector<double> dinf;
};

struct DistortionReport {
    StretchValues stretch;
    std::vector<double> dt;     ///< normalized stretch per triangle
    double d_area = 0.0;
    double d_angle = 0.0;
    double d2_global = 0.0;
    double dinf_global = 0.0;
    double dt_min = 0.0;
    double dt_max = 0.0;
    std::vector<int> degenerate;  ///< zero-area parametric triangles
    std::vector<int> flipped;     ///< orientation opposite to the chart majority
};

/// Parametric triangles with |area| below 1e-12 of their squared longest edge (or exactly 0).
std::vector<int> degenerate_uv_triangles(const TriSurfaceMesh& mesh, const Eigen::MatrixX2d& uv);

/// Relative-area and relative-angle discrepancies between the surface and the chart.
/// Degenerate parametric triangles use the angles (0, 0, pi).
Eigen::Vector2d area_angle_distortion(const TriSurfaceMesh& mesh, const Eigen::MatrixX2d& uv);

StretchValues stretch_per_triangle(const TriSurfaceMesh& mesh, const Eigen::MatrixX2d& uv);

/// Area-weighted RMS of d2 (3D areas) and max of dinf. Triangles listed in `exclude`
/// are left out of the weighted mean.
Eigen::Vector2d global_stretch(const TriSurfaceMesh& mesh, const StretchValues& values,
                               std::span<const int> exclude = {});

/// d2 scaled by sqrt(3D area / parametric area); 1 for an isometric chart.
std::vector<double> normalized_stretch(const TriSurfaceMesh& mesh, const Eigen::MatrixX2d& uv);

DistortionReport compute_distortion(const TriSurfaceMesh& mesh, const Eigen::MatrixX2d& uv);

enum class GateMode { Planar, AfterSeamCut };
enum class GateVerdict { Pass, NeedSeamCut, NeedMultiChart };
const char* to_string(GateMode mode);
const char* to_string(GateVerdict verdict);

struct GateDecision {
    GateVerdict verdict = GateVerdict::Pass;
    GateMode mode = GateMode::Planar;
    std::vector<int> offending;
};

/// Allowed D_t interval, bounds inclusive: [0.5, 2] planar, [0.25, 4] after a seam cut.
Eigen::Vector2d gate_range(GateMode mode);

/// Pass iff every D_t lies in the mode's range and no triangle is listed as invalid.
GateDecision quality_gate(std::span<const double> dt, GateMode mode, std::span<const int> invalid = {});
GateDecision quality_gate(const DistortionReport& report, GateMode mode);

/// triangle,Gamma,gamma,D2,Dinf,Dt
void write_distortion_csv(std::ostream& out, const DistortionReport& report);

}  // namespace stiffen
