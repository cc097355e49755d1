#pragma once

#include "mmf/convex_kernel.hpp"
#include "mmf/model.hpp"

#include <utility>
#include <vector>

// Successive convex approximation for the max-min rate problem: slack-variable
// reformulation, tangent linearization of the dispersion penalty, affine
// restriction of the SINR coupling, and the outer iteration loop.

namespace mmf {

/// Affine form intercept + slope * rho.
struct AffineForm {
    double intercept = 0.0;
    double slope = 0.0;
    double eval(double rho) const { return intercept + slope * rho; }
};

/// Tangent of sqrt(V(rho)) at rho_n. Since sqrt(V) is concave on rho > 0 the
/// tangent upper-bounds it, making the approximated rate a lower bound.
AffineForm dispersion_tangent(double rho_n);

/// Tangent evaluated at rho.
double linearize_dispersion(double rho, double rho_n);

/// Expansion point of one SCA iteration.
struct LinearizationState {
    int iter = 0;
    std::vector<double> powers_n;
    std::vector<double> rho_n;
    std::vector<AffineForm> phi;   // dispersion tangents at rho_n, per stream
};

LinearizationState make_linearization(int iter, std::vector<double> powers_n,
                                      std::vector<double> rho_n);

/// One max-min problem instance.
struct MmfInstance {
    ChannelState channel;
    UserPartition partition;
    DecodingOrder order;
    FblParams fbl;
    double budget = 0.0;  // per-user power cap P_t

    int num_streams() const { return order.num_streams(); }
    void validate() const;
};

/// Instance with the `split_count` strongest users splitting and the
/// low-complexity decoding order.
MmfInstance make_instance(ChannelState channel, int split_count, FblParams fbl,
                          double budget);

struct SolverConfig {
    double tol_tau = 1e-3;        // SCA convergence tolerance on t
    int max_sca_iters = 200;
    double subproblem_tol = 0.0;  // 0 selects tol_tau / 10
    double rho_floor = 1e-9;
    int multi_start = 1;
    bool tin_full_power = false;  // tin_solve only: fixed full power, no optimization

    double effective_subproblem_tol() const {
        return subproblem_tol > 0.0 ? subproblem_tol : tol_tau / 10.0;
    }
};

struct MmfSolution {
    double t_star = 0.0;             // certified achieved min rate
    PowerAllocation powers;
    std::vector<double> user_rates;  // recomputed from powers, clamped
    int iterations = 0;
    bool converged = false;
    double certificate = 0.0;        // max original-constraint violation
    std::vector<double> t_trace;     // monotone accepted objective values
};

struct CertificateReport {
    double rate_slack = 0.0;       // max_k (t_star - R_k)_+
    double budget_violation = 0.0;
    std::vector<double> user_rates;

    double max_violation() const {
        return rate_slack > budget_violation ? rate_slack : budget_violation;
    }
};

/// Default start: splitting users put `split_fraction` of the budget on
/// split-1 and the rest on split-2; non-splitting users transmit full power.
/// rho0 is the exact SINR of p0, floored.
std::pair<std::vector<double>, std::vector<double>> initialize(
    const MmfInstance& instance, double split_fraction = 0.5,
    SinrMode mode = SinrMode::sic, double rho_floor = 1e-9);

/// Affine restriction of gamma_g(p) >= rho_g around the expansion point,
/// as coef.x + constant <= 0 over [p..., rho..., t].
AffineInequality linearize_sinr_constraint(int stream, const LinearizationState& state,
                                           const MmfInstance& instance,
                                           SinrMode mode = SinrMode::sic);

/// Assembled inner convex subproblem plus its variable/constraint layout.
struct SubproblemLayout {
    ConvexProgram program;
    int num_streams = 0;
    int num_rate_constraints = 0;
    int num_sinr_constraints = 0;
    int num_budget_constraints = 0;

    int power_index(int stream) const { return stream; }
    int rho_index(int stream) const { return num_streams + stream; }
    int t_index() const { return 2 * num_streams; }
};

SubproblemLayout assemble_subproblem(const LinearizationState& state,
                                     const MmfInstance& instance,
                                     SinrMode mode = SinrMode::sic);

/// SCA loop: repeatedly solve the inner subproblem, move the expansion point
/// to its optimizer, stop when the objective stalls within tol_tau. Returns
/// the best iterate by certified true min rate. Throws std::runtime_error if
/// the first subproblem is infeasible.
MmfSolution sca_solve(const MmfInstance& instance, const SolverConfig& config = {});

/// Same loop with the interference model swapped (used by the TIN baseline).
MmfSolution sca_solve_mode(const MmfInstance& instance, const SolverConfig& config,
                           SinrMode mode);

/// Recomputes true SINRs and rates from the solution's powers and reports the
/// worst rate shortfall against t_star and the worst budget violation.
CertificateReport certify_solution(const MmfSolution& sol, const MmfInstance& instance,
                                   SinrMode mode = SinrMode::sic);

}  // namespace mmf
