#include "mmf/model.hpp"

#include <algorithm>
#include <numbers>
#include <stdexcept>

namespace mmf {

namespace {

constexpr double kLog2E = std::numbers::log2e;

// Gaussian tail function via the complementary error integral.
double q_function(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

// Standard normal density.
double phi(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

// Acklam's rational approximation of the standard normal quantile,
// used only as the starting point for Newton refinement.
double norm_quantile_estimate(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - plow) {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

void ChannelState::validate() const {
    if (gains.empty()) throw std::invalid_argument("ChannelState: no users");
    if (!(noise_power > 0.0)) throw std::invalid_argument("ChannelState: noise_power must be > 0");
    for (double g : gains) {
        if (!(g >= 0.0) || !std::isfinite(g))
            throw std::invalid_argument("ChannelState: gains must be finite and >= 0");
    }
}

void UserPartition::validate() const {
    if (num_users < 1) throw std::invalid_argument("UserPartition: num_users < 1");
    std::vector<char> seen(static_cast<size_t>(num_users), 0);
    auto mark = [&](int u) {
        if (u < 0 || u >= num_users) throw std::invalid_argument("UserPartition: user index out of range");
        if (seen[static_cast<size_t>(u)]) throw std::invalid_argument("UserPartition: user listed twice");
        seen[static_cast<size_t>(u)] = 1;
    };
    for (int u : splitting) mark(u);
    for (int u : non_splitting) mark(u);
    if (static_cast<int>(splitting.size() + non_splitting.size()) != num_users)
        throw std::invalid_argument("UserPartition: J and U do not cover all users");
}

UserPartition make_partition(const ChannelState& channel, int split_count) {
    channel.validate();
    const int k = channel.num_users();
    if (split_count < 0 || split_count > k)
        throw std::invalid_argument("make_partition: split_count out of range");

    std::vector<int> by_gain(static_cast<size_t>(k));
    for (int i = 0; i < k; ++i) by_gain[static_cast<size_t>(i)] = i;
    std::stable_sort(by_gain.begin(), by_gain.end(), [&](int a, int b) {
        if (channel.gains[static_cast<size_t>(a)] != channel.gains[static_cast<size_t>(b)])
            return channel.gains[static_cast<size_t>(a)] > channel.gains[static_cast<size_t>(b)];
        return a < b;  // deterministic tie-break
    });

    UserPartition part;
    part.num_users = k;
    part.splitting.assign(by_gain.begin(), by_gain.begin() + split_count);
    part.non_splitting.assign(by_gain.begin() + split_count, by_gain.end());
    return part;
}

std::string to_string(const StreamId& id) {
    switch (id.part) {
        case StreamPart::whole: return "s" + std::to_string(id.user + 1);
        case StreamPart::split1: return "s" + std::to_string(id.user + 1) + ",1";
        case StreamPart::split2: return "s" + std::to_string(id.user + 1) + ",2";
    }
    return "?";
}

std::vector<int> DecodingOrder::positions_of(int user) const {
    std::vector<int> pos;
    for (int g = 0; g < num_streams(); ++g)
        if (order[static_cast<size_t>(g)].user == user) pos.push_back(g);
    return pos;
}

DecodingOrder build_decoding_order(const UserPartition& partition,
                                   const ChannelState& channel) {
    partition.validate();
    channel.validate();
    if (channel.num_users() != partition.num_users)
        throw std::invalid_argument("build_decoding_order: channel/partition size mismatch");

    auto desc = [&](std::vector<int> users) {
        std::stable_sort(users.begin(), users.end(), [&](int a, int b) {
            if (channel.gains[static_cast<size_t>(a)] != channel.gains[static_cast<size_t>(b)])
                return channel.gains[static_cast<size_t>(a)] > channel.gains[static_cast<size_t>(b)];
            return a < b;
        });
        return users;
    };
    const std::vector<int> j_sorted = desc(partition.splitting);
    const std::vector<int> u_sorted = desc(partition.non_splitting);

    DecodingOrder out;
    out.order.reserve(static_cast<size_t>(partition.num_streams()));
    for (int u : j_sorted) out.order.push_back({u, StreamPart::split1});
    for (int u : u_sorted) out.order.push_back({u, StreamPart::whole});
    for (int u : j_sorted) out.order.push_back({u, StreamPart::split2});
    return out;
}

bool is_valid_order(const DecodingOrder& order, const UserPartition& partition) {
    if (order.num_streams() != partition.num_streams()) return false;
    auto count = [&](const StreamId& want) {
        int n = 0;
        for (const auto& s : order.order)
            if (s == want) ++n;
        return n;
    };
    for (int u : partition.splitting) {
        if (count({u, StreamPart::split1}) != 1) return false;
        if (count({u, StreamPart::split2}) != 1) return false;
        if (count({u, StreamPart::whole}) != 0) return false;
    }
    for (int u : partition.non_splitting) {
        if (count({u, StreamPart::whole}) != 1) return false;
        if (count({u, StreamPart::split1}) != 0) return false;
        if (count({u, StreamPart::split2}) != 0) return false;
    }
    return true;
}

FblParams FblParams::finite(double blocklength, double epsilon) {
    if (!(blocklength >= 1.0) || !std::isfinite(blocklength))
        throw std::invalid_argument("FblParams: blocklength must be >= 1");
    FblParams p;
    p.blocklength = blocklength;
    p.epsilon = epsilon;
    p.penalty_b = inverse_q(epsilon) * kLog2E;
    return p;
}

FblParams FblParams::infinite(double epsilon) {
    FblParams p;
    p.blocklength = std::numeric_limits<double>::infinity();
    p.epsilon = epsilon;
    p.penalty_b = inverse_q(epsilon) * kLog2E;
    return p;
}

double FblParams::penalty_scale() const {
    if (!is_finite()) return 0.0;
    return penalty_b / std::sqrt(blocklength);
}

double budget_violation(const PowerAllocation& alloc, const DecodingOrder& order) {
    if (alloc.powers.size() != static_cast<size_t>(order.num_streams()))
        throw std::invalid_argument("budget_violation: power/order size mismatch");
    double worst = 0.0;
    std::vector<int> users;
    for (const auto& s : order.order)
        if (std::find(users.begin(), users.end(), s.user) == users.end()) users.push_back(s.user);
    for (int u : users) {
        double total = 0.0;
        for (int g = 0; g < order.num_streams(); ++g)
            if (order.order[static_cast<size_t>(g)].user == u)
                total += alloc.powers[static_cast<size_t>(g)];
        worst = std::max(worst, total - alloc.budget);
    }
    return std::max(0.0, worst);
}

double inverse_q(double epsilon) {
    if (!(epsilon > 0.0) || !(epsilon < 1.0))
        throw std::domain_error("inverse_q: epsilon must lie in (0,1)");
    // Q^{-1}(eps) = Phi^{-1}(1-eps); refine the rational estimate with
    // Newton steps on Q(x) - eps = 0 (Q' = -phi).
    double x = norm_quantile_estimate(1.0 - epsilon);
    for (int i = 0; i < 4; ++i) {
        const double err = q_function(x) - epsilon;
        const double deriv = -phi(x);
        if (deriv == 0.0) break;
        const double step = err / deriv;
        x -= step;
        if (std::abs(step) < 1e-14 * std::max(1.0, std::abs(x))) break;
    }
    return x;
}

double channel_dispersion(double sinr) {
    if (!(sinr >= 0.0)) throw std::invalid_argument("channel_dispersion: sinr must be >= 0");
    const double a = 1.0 + sinr;
    return 1.0 - 1.0 / (a * a);
}

double fbl_rate_raw(double sinr, const FblParams& params) {
    const double shannon = std::log2(1.0 + sinr);
    const double scale = params.penalty_scale();
    if (scale == 0.0) return shannon;  // infinite blocklength: exact
    return shannon - scale * std::sqrt(channel_dispersion(sinr));
}

double fbl_rate(double sinr, const FblParams& params) {
    return std::max(0.0, fbl_rate_raw(sinr, params));
}

std::vector<double> compute_sinr(const DecodingOrder& order,
                                 const PowerAllocation& alloc,
                                 const ChannelState& channel,
                                 SinrMode mode) {
    const int n = order.num_streams();
    if (alloc.powers.size() != static_cast<size_t>(n))
        throw std::invalid_argument("compute_sinr: power/order size mismatch");
    for (const auto& s : order.order) {
        if (s.user < 0 || s.user >= channel.num_users())
            throw std::invalid_argument("compute_sinr: stream user outside channel");
        if (mode == SinrMode::tin && s.part != StreamPart::whole)
            throw std::invalid_argument("compute_sinr: tin mode requires whole streams only");
    }

    std::vector<double> received(static_cast<size_t>(n));
    for (int g = 0; g < n; ++g)
        received[static_cast<size_t>(g)] =
            alloc.powers[static_cast<size_t>(g)] *
            channel.gains[static_cast<size_t>(order.order[static_cast<size_t>(g)].user)];

    std::vector<double> out(static_cast<size_t>(n));
    if (mode == SinrMode::sic) {
        double tail = 0.0;  // interference from streams decoded later
        for (int g = n - 1; g >= 0; --g) {
            out[static_cast<size_t>(g)] = received[static_cast<size_t>(g)] / (tail + channel.noise_power);
            tail += received[static_cast<size_t>(g)];
        }
    } else {
        double total = 0.0;
        for (double r : received) total += r;
        for (int g = 0; g < n; ++g)
            out[static_cast<size_t>(g)] =
                received[static_cast<size_t>(g)] /
                (total - received[static_cast<size_t>(g)] + channel.noise_power);
    }
    return out;
}

UserRates user_min_rate(const std::vector<double>& stream_rates,
                        const DecodingOrder& order,
                        const UserPartition& partition) {
    if (stream_rates.size() != static_cast<size_t>(order.num_streams()))
        throw std::invalid_argument("user_min_rate: rate/order size mismatch");
    if (!is_valid_order(order, partition))
        throw std::invalid_argument("user_min_rate: order does not match partition streams");

    UserRates out;
    out.per_user.assign(static_cast<size_t>(partition.num_users), 0.0);
    for (int g = 0; g < order.num_streams(); ++g)
        out.per_user[static_cast<size_t>(order.order[static_cast<size_t>(g)].user)] +=
            stream_rates[static_cast<size_t>(g)];
    out.min_rate = *std::min_element(out.per_user.begin(), out.per_user.end());
    return out;
}

std::vector<StreamMetrics> evaluate_streams(const DecodingOrder& order,
                                            const PowerAllocation& alloc,
                                            const ChannelState& channel,
                                            const FblParams& fbl,
                                            SinrMode mode) {
    const std::vector<double> sinrs = compute_sinr(order, alloc, channel, mode);
    std::vector<StreamMetrics> out(sinrs.size());
    for (size_t i = 0; i < sinrs.size(); ++i) {
        out[i].sinr = sinrs[i];
        out[i].dispersion = channel_dispersion(sinrs[i]);
        out[i].rate = fbl_rate(sinrs[i], fbl);
    }
    return out;
}

}  // namespace mmf
