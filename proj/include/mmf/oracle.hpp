#pragma once

#include "mmf/sca.hpp"

#include <cstdint>
#include <vector>

// Independent brute-force verifiers: an exhaustive power grid for K=2, full
// enumeration of decoding orders, and a sampled certificate for the tangent
// bound direction. These anchor the SCA solver and are kept free of any
// solver internals.

namespace mmf {

struct OracleReport {
    double best_value = 0.0;
    std::vector<double> best_argument;    // per-stream powers (grid oracle)
    std::vector<StreamId> best_order;     // order oracle only
    std::uint64_t grid_points = 0;        // nominal grid / enumeration size
    std::uint64_t evaluations = 0;        // rate evaluations actually performed
    double solver_value = 0.0;            // filled when a solver run is compared
    double delta = 0.0;                   // signed: oracle - solver
};

/// Exhaustive grid over (split fraction x both users' power fractions) for a
/// two-user instance with at most one splitting user, evaluating exact SIC
/// rates. The scan over the weaker axis uses the monotone structure of the
/// two user rates, which gives exactly the full-grid maximum (cross-checked
/// against plain enumeration in the tests).
OracleReport grid_oracle_k2(const MmfInstance& instance, double resolution);

/// Plain enumeration of the same grid; test-support reference for the fast
/// path, feasible only at coarse resolutions.
OracleReport grid_oracle_k2_naive(const MmfInstance& instance, double resolution);

/// Enumerates every decoding order (streams! permutations), runs the SCA
/// solver per order and reports the best order and the heuristic's shortfall
/// (delta = best - heuristic, solver_value = heuristic order's value).
OracleReport order_oracle(const MmfInstance& instance, const SolverConfig& config = {});

struct TangentCheckReport {
    int samples = 0;
    int violations = 0;
    double worst_gap = 0.0;       // most negative of (Phi - sqrt(V)); >= -1e-9 to pass
    double worst_concavity = 0.0; // largest second difference of sqrt(V); must stay < 0
    bool passed = false;
};

/// Samples (rho, rho_n) pairs over (0, range_max], asserting the tangent
/// upper-bounds sqrt(V) and that sqrt(V) is concave (negative second
/// difference). `flipped` checks the reversed inequality as a negative
/// control.
TangentCheckReport tangent_bound_check(int samples, double range_max,
                                       std::uint64_t seed = 20240901,
                                       bool flipped = false);

}  // namespace mmf
