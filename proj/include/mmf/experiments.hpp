#pragma once

#include "mmf/baselines.hpp"

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

// Seeded Monte Carlo harness: Rayleigh channel generation with a pinned PRNG
// discipline (one master seed, per-realization derived streams), sweep
// execution over scheme x SNR x blocklength cells with shared channels for
// paired comparisons, and CSV/table emission.

namespace mmf {

enum class OrderPolicy { heuristic, exhaustive };

struct SweepConfig {
    std::vector<double> snr_db_list;
    std::vector<double> blocklength_list;  // entries may be infinity
    double epsilon = 1e-5;
    int num_users = 2;
    std::vector<int> split_counts = {1};   // applies to rsma schemes
    std::vector<SchemeTag> schemes = {SchemeTag::rsma, SchemeTag::noma};
    int realizations = 100;
    std::uint64_t seed = 1;
    OrderPolicy order_policy = OrderPolicy::heuristic;
    double tol_tau = 1e-3;

    void validate() const;  // throws std::invalid_argument
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Flat key=value config. Lists are comma-separated; '#' starts a comment;
/// unknown keys raise ConfigError.
SweepConfig parse_sweep_config(std::istream& in);
SweepConfig load_sweep_config(const std::string& path);

struct ResultRow {
    std::string scheme;
    int num_users = 0;
    int split_count = 0;
    double snr_db = 0.0;
    double blocklength = 0.0;  // infinity serialized as "inf"
    double epsilon = 0.0;
    int realization = 0;
    std::uint64_t seed = 0;    // derived per-realization seed
    double min_rate = 0.0;
    bool converged = false;
    int iterations = 0;
    double wall_ms = 0.0;
    bool failed = false;       // solver error; not serialized, drives exit code
};

/// SplitMix64 mix, used to derive per-realization seeds from the master seed.
std::uint64_t splitmix64(std::uint64_t z);

/// |h|^2 draws: squared magnitude of a unit-variance circularly-symmetric
/// complex Gaussian, i.e. Exp(1), generated by inversion from a pinned
/// mt19937_64 uniform so sequences are identical across platforms.
/// Realization r uses the derived seed splitmix64(seed + r), so the first K
/// gains coincide across runs with different user counts.
std::vector<ChannelState> generate_rayleigh(int num_users, int realizations,
                                            std::uint64_t seed);

struct SweepOptions {
    int jobs = 1;
    bool record_timing = true;  // false zeroes wall_ms for byte-stable output
};

struct SweepResult {
    std::vector<ResultRow> rows;
    bool any_failed = false;
};

/// Runs every (scheme, blocklength, SNR, realization) cell. Channels are
/// shared across schemes and cells of one realization. Cell failures are
/// recorded in the row and never abort the sweep. Deterministic row order.
SweepResult run_sweep(const SweepConfig& config, const SweepOptions& options = {});

/// Exact column set: scheme,K,split_count,snr_db,blocklength,epsilon,
/// realization,seed,min_rate,converged,iterations,wall_ms
void write_csv(std::ostream& out, const std::vector<ResultRow>& rows);

/// Per-blocklength whitespace tables of mean min-rate vs SNR, one column per
/// (scheme, split) series; plottable directly with gnuplot.
void write_mean_tables(const std::string& dir, const SweepConfig& config,
                       const std::vector<ResultRow>& rows);

/// (r_rsma - r_noma) / r_noma * 100. Throws std::domain_error when r_noma=0.
double relative_gain(double r_rsma, double r_noma);

/// Mean min_rate of the rows matching the given cell, NaN if none match.
double mean_min_rate(const std::vector<ResultRow>& rows, const std::string& scheme,
                     int split_count, double snr_db, double blocklength);

}  // namespace mmf
