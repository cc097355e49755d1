#include "doctest.h"

#include "mmf/model.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

using namespace mmf;

namespace {

// Independent oracle: bisection on Q(x) = eps with Q evaluated through the
// complementary error integral. Solver-path-free reference for inverse_q.
double inverse_q_bisect(double eps) {
    double lo = -15.0, hi = 15.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (0.5 * std::erfc(mid / std::numbers::sqrt2) > eps ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

ChannelState random_channel(int k, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.05, 3.0);
    ChannelState ch;
    for (int i = 0; i < k; ++i) ch.gains.push_back(u(rng));
    return ch;
}

}  // namespace

TEST_CASE("inverse_q matches the bisection oracle and frozen values") {
    CHECK(std::abs(inverse_q(0.5)) < 1e-12);
    // frozen from the bisection oracle run at 1e-12
    CHECK(inverse_q(1e-5) == doctest::Approx(4.2648907939).epsilon(1e-9));
    CHECK(inverse_q(0.1586553) == doctest::Approx(0.9999998096).epsilon(1e-9));

    for (double eps : {1e-9, 1e-6, 1e-4, 1e-3, 0.01, 0.1586553, 0.3, 0.5, 0.7, 0.9, 0.999}) {
        CHECK(std::abs(inverse_q(eps) - inverse_q_bisect(eps)) < 1e-10);
    }
}

TEST_CASE("inverse_q is monotone decreasing and rejects bad arguments") {
    double prev = inverse_q(1e-8);
    for (double eps : {1e-6, 1e-4, 1e-2, 0.3, 0.6, 0.99}) {
        const double v = inverse_q(eps);
        CHECK(v < prev);
        prev = v;
    }
    CHECK_THROWS_AS(inverse_q(0.0), std::domain_error);
    CHECK_THROWS_AS(inverse_q(1.0), std::domain_error);
    CHECK_THROWS_AS(inverse_q(-0.1), std::domain_error);
    CHECK_THROWS_AS(inverse_q(1.5), std::domain_error);
}

TEST_CASE("FblParams caches B = Qinv(eps) * log2(e)") {
    for (double eps : {1e-5, 1e-3, 0.05}) {
        const FblParams p = FblParams::finite(500, eps);
        const double want = inverse_q(eps) * std::numbers::log2e;
        CHECK(std::abs(p.penalty_b - want) <= 1e-10 * std::abs(want));
    }
    CHECK(FblParams::finite(250, 1e-5).penalty_b == doctest::Approx(6.152936798).epsilon(1e-9));
    CHECK_THROWS_AS(FblParams::finite(0.5, 1e-5), std::invalid_argument);
    CHECK_THROWS_AS(FblParams::finite(100, 0.0), std::domain_error);
    CHECK(!FblParams::infinite().is_finite());
    CHECK(FblParams::infinite().penalty_scale() == 0.0);
}

TEST_CASE("fbl_rate frozen examples") {
    const FblParams p250 = FblParams::finite(250, 1e-5);
    CHECK(fbl_rate(0.0, p250) == 0.0);
    CHECK(fbl_rate(0.0, FblParams::infinite()) == 0.0);
    // high-precision scalar evaluations, frozen
    CHECK(fbl_rate(3.0, p250) == doctest::Approx(1.6232111106).epsilon(1e-8));

    const FblParams p100 = FblParams::finite(100, 1e-5);
    CHECK(fbl_rate_raw(0.01, p100) == doctest::Approx(-0.0720139492).epsilon(1e-7));
    CHECK(fbl_rate(0.01, p100) == 0.0);  // clamped
}

TEST_CASE("fbl_rate is exact at infinite blocklength and monotone") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 50.0);
    const FblParams inf = FblParams::infinite();
    for (int i = 0; i < 200; ++i) {
        const double g = u(rng);
        CHECK(fbl_rate(g, inf) == std::log2(1.0 + g));
    }
    // non-decreasing in N
    double prev = -1.0;
    for (double n : {50.0, 100.0, 500.0, 5000.0}) {
        const double r = fbl_rate(2.0, FblParams::finite(n, 1e-5));
        CHECK(r >= prev);
        prev = r;
    }
    CHECK(fbl_rate(2.0, inf) >= prev);
    // non-decreasing in gamma (clamped)
    prev = -1.0;
    for (double g = 0.0; g < 30.0; g += 0.25) {
        const double r = fbl_rate(g, FblParams::finite(300, 1e-5));
        CHECK(r >= prev);
        prev = r;
    }
    // non-increasing in B (i.e. in Qinv(eps)): smaller eps -> bigger B -> smaller rate
    CHECK(fbl_rate(2.0, FblParams::finite(300, 1e-7)) <= fbl_rate(2.0, FblParams::finite(300, 1e-3)));
}

TEST_CASE("channel dispersion stays in [0,1) and saturates") {
    double prev = -1.0;
    for (double g : {0.0, 0.1, 1.0, 10.0, 1e3, 1e6}) {
        const double v = channel_dispersion(g);
        CHECK(v >= 0.0);
        CHECK(v < 1.0);
        CHECK(v >= prev);
        prev = v;
    }
    CHECK(channel_dispersion(1e8) == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(channel_dispersion(1.0) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("compute_sinr worked examples") {
    // interference-free tail of the SIC chain
    {
        ChannelState ch{{4.0}, 1.0};
        UserPartition part{1, {}, {0}};
        DecodingOrder order{{{0, StreamPart::whole}}};
        CHECK(compute_sinr(order, {{1.0}, 1.0}, ch)[0] == doctest::Approx(4.0));
    }
    // 3 streams, powers (50,100,50), gains (1,0.5,1): gamma_1 = 50/101
    {
        ChannelState ch{{1.0, 0.5, 1.0}, 1.0};
        DecodingOrder order{{{0, StreamPart::whole}, {1, StreamPart::whole}, {2, StreamPart::whole}}};
        const auto g = compute_sinr(order, {{50.0, 100.0, 50.0}, 100.0}, ch);
        CHECK(g[0] == doctest::Approx(50.0 / 101.0).epsilon(1e-12));
        CHECK(g[1] == doctest::Approx(50.0 / 51.0).epsilon(1e-12));
        CHECK(g[2] == doctest::Approx(50.0).epsilon(1e-12));
    }
    // tin mode: full mutual interference
    {
        ChannelState ch{{1.0, 1.0}, 1.0};
        DecodingOrder order{{{0, StreamPart::whole}, {1, StreamPart::whole}}};
        const auto g = compute_sinr(order, {{10.0, 10.0}, 10.0}, ch, SinrMode::tin);
        CHECK(g[0] == doctest::Approx(10.0 / 11.0).epsilon(1e-12));
        CHECK(g[1] == doctest::Approx(10.0 / 11.0).epsilon(1e-12));
    }
}

TEST_CASE("compute_sinr rejects inconsistent inputs") {
    ChannelState ch{{1.0, 1.0}, 1.0};
    DecodingOrder order{{{0, StreamPart::whole}, {1, StreamPart::whole}}};
    CHECK_THROWS_AS(compute_sinr(order, {{1.0}, 10.0}, ch), std::invalid_argument);
    DecodingOrder split_order{{{0, StreamPart::split1}, {1, StreamPart::whole}, {0, StreamPart::split2}}};
    CHECK_THROWS_AS(compute_sinr(split_order, {{1.0, 1.0, 1.0}, 10.0}, ch, SinrMode::tin),
                    std::invalid_argument);
}

TEST_CASE("SIC chain monotonicity in powers (finite differences)") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> up(0.1, 20.0);
    for (int trial = 0; trial < 50; ++trial) {
        ChannelState ch = random_channel(3, rng);
        DecodingOrder order{{{0, StreamPart::whole}, {1, StreamPart::whole}, {2, StreamPart::whole}}};
        std::vector<double> p = {up(rng), up(rng), up(rng)};
        const auto base = compute_sinr(order, {p, 100.0}, ch);
        const double h = 1e-4;
        for (int g = 0; g < 3; ++g) {
            for (int i = 0; i < 3; ++i) {
                auto bumped = p;
                bumped[static_cast<size_t>(i)] += h;
                const auto after = compute_sinr(order, {bumped, 100.0}, ch);
                if (i == g) CHECK(after[static_cast<size_t>(g)] >= base[static_cast<size_t>(g)]);
                if (i > g) CHECK(after[static_cast<size_t>(g)] <= base[static_cast<size_t>(g)]);
            }
        }
    }
}

TEST_CASE("single active stream reduces to the point-to-point SNR") {
    ChannelState ch{{2.0, 0.7, 1.3}, 0.5};
    DecodingOrder order{{{0, StreamPart::whole}, {1, StreamPart::whole}, {2, StreamPart::whole}}};
    const auto g = compute_sinr(order, {{0.0, 8.0, 0.0}, 10.0}, ch);
    CHECK(g[1] == doctest::Approx(8.0 * 0.7 / 0.5).epsilon(1e-12));
}

TEST_CASE("build_decoding_order follows the split1 / whole / split2 layout") {
    // K=3, J={0,2} with gains 2.0 > 0.5, U={1}
    ChannelState ch{{2.0, 1.0, 0.5}, 1.0};
    UserPartition part{3, {0, 2}, {1}};
    const DecodingOrder order = build_decoding_order(part, ch);
    REQUIRE(order.num_streams() == 5);
    CHECK(order.order[0] == StreamId{0, StreamPart::split1});
    CHECK(order.order[1] == StreamId{2, StreamPart::split1});
    CHECK(order.order[2] == StreamId{1, StreamPart::whole});
    CHECK(order.order[3] == StreamId{0, StreamPart::split2});
    CHECK(order.order[4] == StreamId{2, StreamPart::split2});
    CHECK(is_valid_order(order, part));
}

TEST_CASE("build_decoding_order with no splitting users is the descending-gain order") {
    ChannelState ch{{0.4, 1.7}, 1.0};
    UserPartition part{2, {}, {0, 1}};
    const DecodingOrder order = build_decoding_order(part, ch);
    CHECK(order.order[0] == StreamId{1, StreamPart::whole});
    CHECK(order.order[1] == StreamId{0, StreamPart::whole});
}

TEST_CASE("build_decoding_order single splitting user and tie-breaks") {
    ChannelState ch1{{1.0}, 1.0};
    const DecodingOrder o1 = build_decoding_order(UserPartition{1, {0}, {}}, ch1);
    REQUIRE(o1.num_streams() == 2);
    CHECK(o1.order[0] == StreamId{0, StreamPart::split1});
    CHECK(o1.order[1] == StreamId{0, StreamPart::split2});

    // equal gains: ascending user index
    ChannelState ch{{1.0, 1.0, 1.0}, 1.0};
    const DecodingOrder o2 = build_decoding_order(UserPartition{3, {}, {2, 0, 1}}, ch);
    CHECK(o2.order[0].user == 0);
    CHECK(o2.order[1].user == 1);
    CHECK(o2.order[2].user == 2);

    // idempotent: rebuilding gives the identical order
    const DecodingOrder o3 = build_decoding_order(UserPartition{3, {}, {2, 0, 1}}, ch);
    CHECK(o2.order == o3.order);
}

TEST_CASE("make_partition selects the strongest users for splitting") {
    ChannelState ch{{0.3, 2.5, 1.1, 0.9}, 1.0};
    const UserPartition part = make_partition(ch, 2);
    REQUIRE(part.splitting.size() == 2);
    CHECK(part.splitting[0] == 1);
    CHECK(part.splitting[1] == 2);
    CHECK(part.non_splitting[0] == 3);
    CHECK(part.non_splitting[1] == 0);
    part.validate();
    CHECK_THROWS_AS(make_partition(ch, 5), std::invalid_argument);
    CHECK_THROWS_AS(make_partition(ch, -1), std::invalid_argument);
}

TEST_CASE("user_min_rate aggregates split streams and finds the minimum") {
    // splitting user with stream rates (0.8, 0.3) -> R = 1.1
    {
        ChannelState ch{{1.0}, 1.0};
        UserPartition part{1, {0}, {}};
        const DecodingOrder order = build_decoding_order(part, ch);
        const UserRates ur = user_min_rate({0.8, 0.3}, order, part);
        CHECK(ur.per_user[0] == doctest::Approx(1.1));
        CHECK(ur.min_rate == doctest::Approx(1.1));
    }
    // all users at a constant rate
    {
        ChannelState ch{{1.0, 1.0, 1.0}, 1.0};
        UserPartition part{3, {}, {0, 1, 2}};
        const DecodingOrder order = build_decoding_order(part, ch);
        const UserRates ur = user_min_rate({0.4, 0.4, 0.4}, order, part);
        CHECK(ur.min_rate == doctest::Approx(0.4));
    }
    // K=2, J={0}: heuristic order [s0,1; s1; s0,2], rates (1.2, 0.9, 0.4)
    {
        ChannelState ch{{2.0, 1.0}, 1.0};
        UserPartition part{2, {0}, {1}};
        const DecodingOrder order = build_decoding_order(part, ch);
        const UserRates ur = user_min_rate({1.2, 0.9, 0.4}, order, part);
        CHECK(ur.per_user[0] == doctest::Approx(1.6));
        CHECK(ur.per_user[1] == doctest::Approx(0.9));
        CHECK(ur.min_rate == doctest::Approx(0.9));
    }
}

TEST_CASE("user_min_rate rejects orders with missing streams") {
    ChannelState ch{{2.0, 1.0}, 1.0};
    UserPartition part{2, {0}, {1}};
    DecodingOrder broken{{{0, StreamPart::split1}, {1, StreamPart::whole}, {1, StreamPart::whole}}};
    CHECK_THROWS_AS(user_min_rate({1.0, 1.0, 1.0}, broken, part), std::invalid_argument);
}

TEST_CASE("partition and channel validation") {
    CHECK_THROWS_AS((ChannelState{{}, 1.0}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((ChannelState{{1.0}, 0.0}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((ChannelState{{-1.0}, 1.0}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((UserPartition{2, {0}, {0}}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((UserPartition{2, {0}, {}}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((UserPartition{2, {0, 2}, {1}}).validate(), std::invalid_argument);
}

TEST_CASE("budget_violation measures per-user overdraw") {
    ChannelState ch{{2.0, 1.0}, 1.0};
    UserPartition part{2, {0}, {1}};
    const DecodingOrder order = build_decoding_order(part, ch);
    CHECK(budget_violation({{5.0, 10.0, 5.0}, 10.0}, order) == 0.0);
    CHECK(budget_violation({{5.0, 10.0, 5.001}, 10.0}, order) == doctest::Approx(0.001));
    CHECK(budget_violation({{0.0, 10.5, 0.0}, 10.0}, order) == doctest::Approx(0.5));
}

TEST_CASE("evaluate_streams bundles sinr, dispersion and clamped rate") {
    ChannelState ch{{1.0, 1.0}, 1.0};
    DecodingOrder order{{{0, StreamPart::whole}, {1, StreamPart::whole}}};
    const auto m = evaluate_streams(order, {{100.0, 9.5125}, 100.0}, ch, FblParams::infinite());
    CHECK(m[0].sinr == doctest::Approx(100.0 / 10.5125).epsilon(1e-10));
    CHECK(m[1].sinr == doctest::Approx(9.5125).epsilon(1e-12));
    CHECK(m[0].rate == doctest::Approx(std::log2(1.0 + m[0].sinr)).epsilon(1e-12));
    CHECK(m[0].dispersion == doctest::Approx(channel_dispersion(m[0].sinr)).epsilon(1e-12));
}
