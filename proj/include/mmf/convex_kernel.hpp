#pragma once

#include <vector>

// Small dense convex kernel: maximize one variable subject to affine
// inequalities and concave "sum of logs minus affine penalty" rate
// constraints. Logarithmic-barrier path following with damped Newton
// centering. Problem sizes are tens of variables at most; everything is
// dense.
//
// Constraint ordering used for multipliers and KKT residuals:
//   [affine inequalities] [log-rate constraints] [finite lower bounds]

namespace mmf {

/// coef . x + constant <= 0
struct AffineInequality {
    std::vector<double> coef;
    double constant = 0.0;
};

/// sum_i log2(1 + x[rho_indices[i]]) - (penalty_const + penalty_coef . x)
///   - x[t_index] >= 0
struct LogRateConstraint {
    std::vector<int> rho_indices;
    std::vector<double> penalty_coef;  // dense, length num_vars (may be empty = 0)
    double penalty_const = 0.0;
    int t_index = -1;
};

struct ConvexProgram {
    int num_vars = 0;
    std::vector<AffineInequality> affine_inequalities;
    std::vector<LogRateConstraint> log_rate_constraints;
    int objective_index = -1;          // maximize x[objective_index]
    std::vector<double> lower_bounds;  // -inf where unbounded

    int num_finite_bounds() const;
    /// Total barrier constraints (affine + log-rate + finite bounds).
    int num_constraints() const;
    void validate() const;
};

enum class KernelStatus { optimal, infeasible, max_iter };

struct KernelResult {
    std::vector<double> x;
    double objective = 0.0;
    double kkt_residual = 0.0;
    double duality_gap = 0.0;              // m / mu at exit
    KernelStatus status = KernelStatus::max_iter;
    std::vector<double> multipliers;       // barrier estimates, constraint order above
    std::vector<double> path_residuals;    // KKT residual after each barrier stage
    int newton_steps = 0;
};

struct Phase1Result {
    bool feasible = false;
    std::vector<double> x;
    double max_violation = 0.0;  // minimized max constraint violation
};

/// Strictly feasible interior point (slack >= 1e-8 on every constraint), or
/// an infeasibility verdict when the minimized violation stays positive.
Phase1Result phase1_point(const ConvexProgram& program);

/// Maximize x[objective_index]. Barrier parameter starts at 10 and grows by
/// a factor of 10 until m/mu <= tol. `warm_start`, when given and strictly
/// feasible, skips phase 1.
KernelResult solve_max_t(const ConvexProgram& program, double tol,
                         const std::vector<double>* warm_start = nullptr);

/// Max of stationarity inf-norm, complementary-slackness inf-norm and primal
/// violation for the given point and multipliers.
double kkt_residual(const ConvexProgram& program, const std::vector<double>& x,
                    const std::vector<double>& multipliers);

}  // namespace mmf
