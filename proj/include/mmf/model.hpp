#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

// Uplink system model: user partitions, stream layouts, SIC decoding orders,
// per-stream SINR chains and normal-approximation achievable rates.
//
// All quantities are linear-scale (power gains |h_k|^2, noise variance,
// transmit powers). Rates are in bits per channel use. Types are immutable
// value types; every operation here is a pure function.

namespace mmf {

/// Per-user channel power gains |h_k|^2 plus receiver noise variance.
struct ChannelState {
    std::vector<double> gains;   // |h_k|^2, indexed by user, linear scale
    double noise_power = 1.0;    // sigma_n^2

    int num_users() const { return static_cast<int>(gains.size()); }
    void validate() const;       // throws std::invalid_argument
};

/// Split of the user set into splitting users J and non-splitting users U.
/// Both lists are ordered by descending channel gain when produced by
/// make_partition (ties broken by ascending user index).
struct UserPartition {
    int num_users = 0;
    std::vector<int> splitting;      // J
    std::vector<int> non_splitting;  // U = {0..K-1} \ J

    int split_count() const { return static_cast<int>(splitting.size()); }
    int num_streams() const { return num_users + split_count(); }
    void validate() const;
};

/// Partition with the `split_count` strongest users (by gain) splitting.
UserPartition make_partition(const ChannelState& channel, int split_count);

enum class StreamPart { whole, split1, split2 };

struct StreamId {
    int user = 0;
    StreamPart part = StreamPart::whole;

    friend bool operator==(const StreamId&, const StreamId&) = default;
};

std::string to_string(const StreamId& id);

/// SIC permutation over all 2|J|+|U| streams; order[0] is decoded first.
struct DecodingOrder {
    std::vector<StreamId> order;

    int num_streams() const { return static_cast<int>(order.size()); }
    /// Positions of `user`'s streams within the order (1 or 2 entries).
    std::vector<int> positions_of(int user) const;
};

/// Low-complexity order: split-1 streams by descending gain, then whole
/// streams by descending gain, then split-2 streams by descending gain.
/// With J empty this is the plain descending-gain SIC order.
DecodingOrder build_decoding_order(const UserPartition& partition,
                                   const ChannelState& channel);

/// Checks that `order` is an exact permutation of the partition's streams.
bool is_valid_order(const DecodingOrder& order, const UserPartition& partition);

/// Blocklength / error-probability pair with the cached penalty coefficient
/// B = Q^{-1}(epsilon) * log2(e). An infinite blocklength selects the
/// asymptotic regime where the dispersion penalty vanishes.
struct FblParams {
    double blocklength = std::numeric_limits<double>::infinity();  // N, channel uses
    double epsilon = 1e-5;                                         // block error probability
    double penalty_b = 0.0;                                        // B, cached

    static FblParams finite(double blocklength, double epsilon);
    static FblParams infinite(double epsilon = 1e-5);

    bool is_finite() const { return std::isfinite(blocklength); }
    /// B / sqrt(N); exactly 0 in the infinite-blocklength regime.
    double penalty_scale() const;
};

/// Per-stream transmit powers, aligned with a DecodingOrder.
struct PowerAllocation {
    std::vector<double> powers;
    double budget = 0.0;   // per-user cap P_t
};

/// Max over users of (sum of the user's stream powers - budget), clamped at 0.
double budget_violation(const PowerAllocation& alloc, const DecodingOrder& order);

/// SINR, channel dispersion and rate of one stream.
struct StreamMetrics {
    double sinr = 0.0;        // gamma
    double dispersion = 0.0;  // V = 1 - (1+gamma)^-2
    double rate = 0.0;        // bits/channel use, clamped at 0
};

enum class SinrMode { sic, tin };

/// Inverse of the Gaussian tail function Q. Monotone decreasing, Q(x)=eps
/// to 1e-10 absolute. Throws std::domain_error outside (0,1).
double inverse_q(double epsilon);

/// V(gamma) = 1 - (1+gamma)^-2, in [0,1) for gamma >= 0.
double channel_dispersion(double sinr);

/// log2(1+gamma) - (B/sqrt(N)) * sqrt(V(gamma)); may be negative.
double fbl_rate_raw(double sinr, const FblParams& params);

/// Normal-approximation achievable rate, clamped at 0.
double fbl_rate(double sinr, const FblParams& params);

/// Per-stream SINRs. sic: stream g sees only streams decoded after it as
/// interference. tin: every stream sees all other streams (whole-message
/// streams only).
std::vector<double> compute_sinr(const DecodingOrder& order,
                                 const PowerAllocation& alloc,
                                 const ChannelState& channel,
                                 SinrMode mode = SinrMode::sic);

struct UserRates {
    std::vector<double> per_user;  // R_k, indexed by user
    double min_rate = 0.0;
};

/// Per-user rates (splitting users sum their two stream rates) and the
/// minimum over users. Throws if a user's streams are missing from the order.
UserRates user_min_rate(const std::vector<double>& stream_rates,
                        const DecodingOrder& order,
                        const UserPartition& partition);

/// Full (gamma, V, r) chain for an allocation.
std::vector<StreamMetrics> evaluate_streams(const DecodingOrder& order,
                                            const PowerAllocation& alloc,
                                            const ChannelState& channel,
                                            const FblParams& fbl,
                                            SinrMode mode = SinrMode::sic);

}  // namespace mmf
