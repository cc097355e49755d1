#include "mmf/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace mmf {

namespace {

// Exact per-candidate evaluation of the two-user SIC chain, kept free of the
// solver path. Stream order, gains and the dispersion penalty come straight
// from the instance.
struct TwoUserEval {
    double gain[3];       // per stream position
    int user_of[3];       // 0 = first user in `users`, 1 = second
    int num_streams = 0;
    double noise = 1.0;
    double penalty = 0.0;  // B / sqrt(N)

    double rate(double sinr) const {
        const double a = 1.0 + sinr;
        const double r = std::log2(a) - penalty * std::sqrt(1.0 - 1.0 / (a * a));
        return r > 0.0 ? r : 0.0;
    }

    // powers aligned with stream positions; returns min over the two users
    // and both user rates through the out-params.
    double min_rate(const double* powers, double& r_first, double& r_second) const {
        double received[3];
        for (int g = 0; g < num_streams; ++g) received[g] = powers[g] * gain[g];
        double user_rate[2] = {0.0, 0.0};
        double tail = 0.0;
        for (int g = num_streams - 1; g >= 0; --g) {
            user_rate[user_of[g]] += rate(received[g] / (tail + noise));
            tail += received[g];
        }
        r_first = user_rate[0];
        r_second = user_rate[1];
        return user_rate[0] < user_rate[1] ? user_rate[0] : user_rate[1];
    }
};

struct GridSetup {
    TwoUserEval eval;
    int split_user_slot = -1;   // slot in `users` of the splitting user, -1 if none
    int pos_split1 = -1, pos_split2 = -1, pos_other = -1;  // stream positions
    int users[2] = {-1, -1};
};

GridSetup setup_grid(const MmfInstance& inst) {
    if (inst.partition.num_users != 2)
        throw std::invalid_argument("grid_oracle_k2: requires exactly 2 users");
    if (inst.partition.split_count() > 1)
        throw std::invalid_argument("grid_oracle_k2: at most one splitting user");
    GridSetup g;
    g.eval.num_streams = inst.num_streams();
    g.eval.noise = inst.channel.noise_power;
    g.eval.penalty = inst.fbl.penalty_scale();

    int next_slot = 0;
    for (int s = 0; s < inst.num_streams(); ++s) {
        const StreamId& id = inst.order.order[static_cast<size_t>(s)];
        int slot = -1;
        for (int k = 0; k < next_slot; ++k)
            if (g.users[k] == id.user) slot = k;
        if (slot < 0) {
            slot = next_slot++;
            g.users[slot] = id.user;
        }
        g.eval.user_of[s] = slot;
        g.eval.gain[s] = inst.channel.gains[static_cast<size_t>(id.user)];
        switch (id.part) {
            case StreamPart::split1: g.pos_split1 = s; g.split_user_slot = slot; break;
            case StreamPart::split2: g.pos_split2 = s; break;
            case StreamPart::whole:
                if (inst.partition.split_count() == 1) g.pos_other = s;
                break;
        }
    }
    return g;
}

int grid_size(double resolution) {
    if (!(resolution > 0.0) || resolution > 1.0)
        throw std::invalid_argument("grid_oracle_k2: resolution must lie in (0,1]");
    return static_cast<int>(std::llround(1.0 / resolution));
}

}  // namespace

OracleReport grid_oracle_k2(const MmfInstance& instance, double resolution) {
    instance.validate();
    const GridSetup g = setup_grid(instance);
    const int m = grid_size(resolution);
    const double p_t = instance.budget;
    OracleReport rep;
    rep.best_value = -1.0;

    double powers[3] = {0.0, 0.0, 0.0};
    double r_first = 0.0, r_second = 0.0;

    if (instance.partition.split_count() == 0) {
        // streams: two whole messages; scan user 0's fraction, locate the
        // crossing of the monotone user rates along user 1's fraction.
        rep.grid_points = static_cast<std::uint64_t>(m + 1) * (m + 1);
        const int p0 = 0, p1 = 1;
        const int slot1 = g.eval.user_of[p1];
        for (int i = 0; i <= m; ++i) {
            powers[p0] = p_t * i / m;
            auto value_at = [&](int k, double& diff) {
                powers[p1] = p_t * k / m;
                const double v = g.eval.min_rate(powers, r_first, r_second);
                const double own = slot1 == 0 ? r_first : r_second;
                const double other = slot1 == 0 ? r_second : r_first;
                diff = own - other;  // non-decreasing in k
                ++rep.evaluations;
                return v;
            };
            double diff;
            int lo = 0, hi = m;
            value_at(0, diff);
            if (diff > 0.0) {
                hi = 0;
            } else {
                value_at(m, diff);
                if (diff <= 0.0) {
                    lo = m;
                } else {
                    while (hi - lo > 1) {
                        const int mid = (lo + hi) / 2;
                        value_at(mid, diff);
                        (diff <= 0.0 ? lo : hi) = mid;
                    }
                }
            }
            for (int k : {lo, hi}) {
                double d;
                const double v = value_at(k, d);
                if (v > rep.best_value) {
                    rep.best_value = v;
                    rep.best_argument = {powers[0], powers[1]};
                }
            }
        }
        return rep;
    }

    // one splitting user: grid (total fraction, split fraction), crossing
    // search along the non-splitting user's fraction.
    rep.grid_points = static_cast<std::uint64_t>(m + 1) * (m + 1) * (m + 1);
    const int other_slot = 1 - g.split_user_slot;
    for (int i = 0; i <= m; ++i) {
        const double total = p_t * i / m;
        for (int a = 0; a <= m; ++a) {
            powers[g.pos_split1] = total * a / m;
            powers[g.pos_split2] = total * (m - a) / m;
            auto value_at = [&](int k, double& diff) {
                powers[g.pos_other] = p_t * k / m;
                const double v = g.eval.min_rate(powers, r_first, r_second);
                const double own = other_slot == 0 ? r_first : r_second;
                const double split = other_slot == 0 ? r_second : r_first;
                diff = own - split;  // non-decreasing in k
                ++rep.evaluations;
                return v;
            };
            double diff;
            int lo = 0, hi = m;
            value_at(0, diff);
            if (diff > 0.0) {
                hi = 0;
            } else {
                value_at(m, diff);
                if (diff <= 0.0) {
                    lo = m;
                } else {
                    while (hi - lo > 1) {
                        const int mid = (lo + hi) / 2;
                        value_at(mid, diff);
                        (diff <= 0.0 ? lo : hi) = mid;
                    }
                }
            }
            for (int k : {lo, hi}) {
                double d;
                const double v = value_at(k, d);
                if (v > rep.best_value) {
                    rep.best_value = v;
                    rep.best_argument = {powers[0], powers[1], powers[2]};
                }
            }
        }
    }
    return rep;
}

OracleReport grid_oracle_k2_naive(const MmfInstance& instance, double resolution) {
    instance.validate();
    const GridSetup g = setup_grid(instance);
    const int m = grid_size(resolution);
    const double p_t = instance.budget;
    OracleReport rep;
    rep.best_value = -1.0;
    double powers[3] = {0.0, 0.0, 0.0};
    double r0, r1;

    if (instance.partition.split_count() == 0) {
        rep.grid_points = static_cast<std::uint64_t>(m + 1) * (m + 1);
        for (int i = 0; i <= m; ++i) {
            powers[0] = p_t * i / m;
            for (int k = 0; k <= m; ++k) {
                powers[1] = p_t * k / m;
                const double v = g.eval.min_rate(powers, r0, r1);
                ++rep.evaluations;
                if (v > rep.best_value) {
                    rep.best_value = v;
                    rep.best_argument = {powers[0], powers[1]};
                }
            }
        }
        return rep;
    }

    rep.grid_points = static_cast<std::uint64_t>(m + 1) * (m + 1) * (m + 1);
    for (int i = 0; i <= m; ++i) {
        const double total = p_t * i / m;
        for (int a = 0; a <= m; ++a) {
            powers[g.pos_split1] = total * a / m;
            powers[g.pos_split2] = total * (m - a) / m;
            for (int k = 0; k <= m; ++k) {
                powers[g.pos_other] = p_t * k / m;
                const double v = g.eval.min_rate(powers, r0, r1);
                ++rep.evaluations;
                if (v > rep.best_value) {
                    rep.best_value = v;
                    rep.best_argument = {powers[0], powers[1], powers[2]};
                }
            }
        }
    }
    return rep;
}

OracleReport order_oracle(const MmfInstance& instance, const SolverConfig& config) {
    instance.validate();
    const int s = instance.num_streams();
    if (s > 7) throw std::invalid_argument("order_oracle: more than 7 streams");

    std::vector<StreamId> streams = instance.order.order;
    auto key = [](const StreamId& id) {
        return id.user * 4 + static_cast<int>(id.part);
    };
    std::sort(streams.begin(), streams.end(),
              [&](const StreamId& a, const StreamId& b) { return key(a) < key(b); });

    OracleReport rep;
    rep.best_value = -1.0;
    do {
        MmfInstance cand = instance;
        cand.order.order = streams;
        const MmfSolution sol = sca_solve(cand, config);
        ++rep.grid_points;
        if (sol.t_star > rep.best_value) {
            rep.best_value = sol.t_star;
            rep.best_order = streams;
            rep.best_argument = sol.powers.powers;
        }
    } while (std::next_permutation(
        streams.begin(), streams.end(),
        [&](const StreamId& a, const StreamId& b) { return key(a) < key(b); }));

    MmfInstance heuristic = instance;
    heuristic.order = build_decoding_order(instance.partition, instance.channel);
    rep.solver_value = sca_solve(heuristic, config).t_star;
    rep.delta = rep.best_value - rep.solver_value;
    return rep;
}

TangentCheckReport tangent_bound_check(int samples, double range_max, std::uint64_t seed,
                                       bool flipped) {
    if (samples < 1) throw std::invalid_argument("tangent_bound_check: samples must be >= 1");
    if (!(range_max > 0.0)) throw std::invalid_argument("tangent_bound_check: empty range");

    std::mt19937_64 rng(seed);
    auto u01 = [&rng] { return (rng() >> 11) * 0x1.0p-53; };
    auto sample = [&] {
        // half uniform, half log-uniform so small arguments are covered
        if (rng() & 1u) return u01() * range_max + 1e-12;
        return range_max * std::pow(10.0, -9.0 * u01()) ;
    };
    auto sqrt_v = [](double rho) {
        const double a = 1.0 + rho;
        return std::sqrt(1.0 - 1.0 / (a * a));
    };

    TangentCheckReport rep;
    rep.samples = samples;
    rep.worst_gap = std::numeric_limits<double>::infinity();
    rep.worst_concavity = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < samples; ++i) {
        const double rho_n = sample();
        const double rho = (i % 10 == 0) ? rho_n : sample();  // include tangency points
        const double phi = linearize_dispersion(rho, rho_n);
        const double gap = flipped ? sqrt_v(rho) - phi : phi - sqrt_v(rho);
        rep.worst_gap = std::min(rep.worst_gap, gap);
        if (gap < -1e-9) ++rep.violations;

        const double h = std::max(1e-4 * rho, 1e-6);
        if (rho > h) {
            const double second = sqrt_v(rho + h) - 2.0 * sqrt_v(rho) + sqrt_v(rho - h);
            rep.worst_concavity = std::max(rep.worst_concavity, second);
            if (second > 1e-9) ++rep.violations;
        }
    }
    rep.passed = rep.violations == 0;
    return rep;
}

}  // namespace mmf
