#pragma once

#include "stiffen/bspline.hpp"
#include "stiffen/prism_fea.hpp"

#include <Eigen/SparseCore>

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace stiffen {

/// All charts' control heights as one design vector (chart by chart, row-major grids),
/// with the constant map from control heights to element centroid heights.
class DesignSpace {
public:
    DesignSpace(const PrismModel& model, std::span<const BSplineHeightField<double>> fields);

    int size() const { return static_cast<int>(W_.cols()); }
    double h_max() const { return h_max_; }

    Eigen::VectorXd pack(std::span<const BSplineHeightField<double>> fields) const;
    /// Writes x back into copies of the template fields.
    std::vector<BSplineHeightField<double>> unpack(const Eigen::VectorXd& x) const;

    /// h_c per element (0 for skin elements).
    Eigen::VectorXd element_heights(const Eigen::VectorXd& x) const;
    /// Row k holds N_i(u_k) N_j(v_k) for the design element k.
    const Eigen::SparseMatrix<double, Eigen::RowMajor>& weights() const { return W_; }

private:
    const PrismModel& model_;
    std::vector<BSplineHeightField<double>> templates_;
    std::vector<int> offset_;
    Eigen::SparseMatrix<double, Eigen::RowMajor> W_;
    double h_max_ = 0.0;
};

Eigen::VectorXd design_densities(const PrismModel& model, const DesignSpace& space, const Eigen::VectorXd& x,
                                 double beta);

/// dC/dx = -1/2 sum_k (1 - rho_min) rho'_k W_k (u_k^T k_k u_k). Throws StaleStateError when
/// `solution` was computed for other densities than x and beta give.
Eigen::VectorXd compliance_sensitivity(const PrismModel& model, const SolveResult& solution,
                                       const DesignSpace& space, const Eigen::VectorXd& x, double beta);

struct VolumeState {
    double g = 0.0;           ///< design volume fraction minus target
    Eigen::VectorXd dg;
};

VolumeState volume_and_sensitivity(const PrismModel& model, const DesignSpace& space, const Eigen::VectorXd& x,
                                   double beta, double target);

struct UpdateOptions {
    double move = 0.0;        ///< absolute move limit per variable
    Eigen::VectorXd moves;    ///< per-variable limits; replaces `move` when non-empty
    double lower = 0.0;
    double upper = 1.0;
    double exponent = 0.5;
    double epsilon = 1e-30;
    int max_bisections = 100;
    /// Constraint value of a candidate; the linearization g + dg.(x' - x) when empty.
    std::function<double(const Eigen::VectorXd&)> constraint;
};

struct UpdateResult {
    Eigen::VectorXd x;
    double lambda = 0.0;
    double constraint = 0.0;  ///< constraint value at the returned x
    int bisections = 0;
};

/// Optimality-criteria step with the multiplier found by geometric bisection.
/// Throws ValidationError when g > 0 but dg vanishes everywhere.
UpdateResult update_design(const Eigen::VectorXd& x, const Eigen::VectorXd& dC, const Eigen::VectorXd& dg,
                           double g, const UpdateOptions& options);

struct OptSettings {
    double volume_fraction = 0.1;
    int max_iters = 300;
    double move_fraction = 0.05;   ///< move limit as a fraction of H_max
    double tol = 1e-4;             ///< relative compliance change
    int window = 10;
    double g_tol = 1e-3;
    double beta_start = 8.0;       ///< times 1 / layer thickness
    double beta_cap = 64.0;        ///< times 1 / layer thickness
    int beta_every = 50;           ///< 0 disables continuation
    bool exact_volume = true;      ///< bisect on the true volume instead of its linearization
    bool adaptive_move = true;     ///< halve a variable's move limit when its step reverses
};

struct HistoryRow {
    int iteration = 0;
    double compliance = 0.0;
    double volume_fraction = 0.0;
    double beta = 0.0;
    double max_change = 0.0;       ///< largest |x - x_prev| that produced this iterate
};

struct OptState {
    Eigen::VectorXd x;
    double compliance = 0.0;
    double g = 0.0;
    Eigen::VectorXd dC;
    Eigen::VectorXd dg;
    double beta = 0.0;
    std::vector<HistoryRow> history;
    bool converged = false;
    Eigen::VectorXd rho;
    SolveResult solution;
};

struct OptProblem {
    const PrismModel* model = nullptr;
    std::vector<BSplineHeightField<double>> fields;  ///< layout of the design; heights ignored
    OptSettings settings;
};

/// Uniform control height whose design volume fraction equals the target at beta.
double uniform_height_for_volume(const PrismModel& model, const DesignSpace& space, double beta, double target);

struct Baseline {
    double height = 0.0;
    double compliance = 0.0;
    double volume_fraction = 0.0;
};
Baseline uniform_baseline(const PrismModel& model, const DesignSpace& space, double beta, double target);

double layer_thickness(const PrismModel& model);

/// Starts from the uniform design at the target volume and iterates densities, solve,
/// sensitivities and the OC update. `on_iteration`, if set, sees every evaluated state.
OptState optimize(const OptProblem& problem, const std::function<void(const OptState&)>& on_iteration = {});

/// iteration,compliance,volume_fraction,beta,max_change
void write_history_csv(std::ostream& out, std::span<const HistoryRow> history);

}  // namespace stiffen
