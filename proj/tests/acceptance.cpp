// Acceptance suite: one line per criterion, exit code = number of failures.
//
// Criteria 1, 3, 4 and the cross-regime half of 5 compare finite-blocklength
// rate-splitting against infinite-blocklength baselines; with the dispersion
// penalty B/sqrt(N) used throughout this library they are not attainable
// (the exhaustive grid oracle agrees with the solver, so the gap is in the
// comparison itself, not the optimizer). Informational [info] lines evaluate
// the same trends under the literal B/N penalty variant, expressed through
// the public API via eps' = Q(Qinv(eps)/sqrt(N)), which reproduces them.

#include "mmf/baselines.hpp"
#include "mmf/experiments.hpp"
#include "mmf/oracle.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace mmf;

namespace {

constexpr std::uint64_t kSeed = 20260809;
constexpr double kEps = 1e-5;

int g_failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %d: %s  (%s)\n", pass ? "PASS" : "FAIL", id, name,
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

void info(const std::string& line) {
    std::printf("       [info] %s\n", line.c_str());
    std::fflush(stdout);
}

double q_of(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

// Penalty variant with scale B/N instead of B/sqrt(N), built through the
// public API: Qinv(eps')/sqrt(N) = Qinv(eps)/N.
FblParams paper_literal_fbl(double n, double eps) {
    return FblParams::finite(n, q_of(inverse_q(eps) / std::sqrt(n)));
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof buf, f, args);
    va_end(args);
    return buf;
}

double mean_rsma(const std::vector<ChannelState>& chs, int split, const FblParams& fbl,
                 double budget) {
    double sum = 0.0;
    for (const auto& ch : chs) sum += sca_solve(make_instance(ch, split, fbl, budget)).t_star;
    return sum / static_cast<double>(chs.size());
}

double mean_noma(const std::vector<ChannelState>& chs, const FblParams& fbl, double budget) {
    double sum = 0.0;
    for (const auto& ch : chs) sum += noma_solve(ch, fbl, budget).t_star;
    return sum / static_cast<double>(chs.size());
}

double mean_tin(const std::vector<ChannelState>& chs, const FblParams& fbl, double budget) {
    double sum = 0.0;
    for (const auto& ch : chs) sum += tin_solve(ch, fbl, budget).t_star;
    return sum / static_cast<double>(chs.size());
}

std::vector<double> snr_grid() { return {0, 5, 10, 15, 20, 25, 30}; }

double budget_of(double snr_db) { return std::pow(10.0, snr_db / 10.0); }

// ---- criterion 1: Fig. 1(c) trend --------------------------------------

void criterion1() {
    const auto chs = generate_rayleigh(2, 100, kSeed);
    auto run = [&](const FblParams& rsma_fbl) {
        std::pair<bool, std::string> out{true, ""};
        for (double snr : snr_grid()) {
            const double mr = mean_rsma(chs, 1, rsma_fbl, budget_of(snr));
            const double mn = mean_noma(chs, FblParams::infinite(kEps), budget_of(snr));
            out.first = out.first && mr >= mn;
            out.second += fmt("%g:%+.4f ", snr, mr - mn);
        }
        return out;
    };
    const auto spec = run(FblParams::finite(1500, kEps));
    report(1, "mean FBL RSMA (N=1500) >= mean IFBL NOMA at every SNR", spec.first,
           "mean gaps per SNR dB: " + spec.second);
    const auto lit = run(paper_literal_fbl(1500, kEps));
    info(fmt("paper-literal B/N penalty: %s, gaps: %s", lit.first ? "holds" : "fails",
             lit.second.c_str()));
}

// ---- criterion 2: scheme ordering ---------------------------------------

void criterion2() {
    const auto chs = generate_rayleigh(2, 100, kSeed);
    bool pass = true;
    std::string detail;
    for (double n : {250.0, 1500.0}) {
        const FblParams fbl = FblParams::finite(n, kEps);
        for (double snr : snr_grid()) {
            const double b = budget_of(snr);
            const double mr = mean_rsma(chs, 1, fbl, b);
            const double mn = mean_noma(chs, fbl, b);
            const double mt = mean_tin(chs, fbl, b);
            const bool cell = mr >= mn && mn >= mt - 1e-3 && (snr < 10.0 || (mt < mn && mt < mr));
            if (!cell) detail += fmt("N=%g snr=%g: r=%.4f n=%.4f t=%.4f; ", n, snr, mr, mn, mt);
            pass = pass && cell;
        }
    }
    report(2, "mean RSMA >= NOMA >= TIN - 1e-3 per cell, TIN strictly worst at >=10 dB", pass,
           pass ? "all 14 cells ordered" : detail);
}

// ---- criterion 3: power-split share -------------------------------------

double median_split_share(const std::vector<ChannelState>& chs, const FblParams& fbl,
                          double budget) {
    std::vector<double> shares;
    for (const auto& ch : chs) {
        const MmfInstance inst = make_instance(ch, 1, fbl, budget);
        const MmfSolution sol = sca_solve(inst);
        double split1 = 0.0, split2 = 0.0;
        for (int g = 0; g < inst.num_streams(); ++g) {
            if (inst.order.order[static_cast<size_t>(g)].part == StreamPart::split1)
                split1 = sol.powers.powers[static_cast<size_t>(g)];
            if (inst.order.order[static_cast<size_t>(g)].part == StreamPart::split2)
                split2 = sol.powers.powers[static_cast<size_t>(g)];
        }
        shares.push_back(split1 / (split1 + split2));
    }
    std::sort(shares.begin(), shares.end());
    return shares[shares.size() / 2];
}

void criterion3() {
    const auto chs = generate_rayleigh(2, 100, kSeed);
    bool pass = true;
    std::string detail = "medians ";
    for (double snr : {20.0, 25.0, 30.0}) {
        const double med = median_split_share(chs, FblParams::finite(1500, kEps), budget_of(snr));
        pass = pass && med >= 0.85 && med <= 0.97 && std::abs(med - 0.93) <= 0.05;
        detail += fmt("%g:%.3f ", snr, med);
    }
    report(3, "first split stream carries ~93% of the splitting user's power (median)", pass,
           detail);
    // the ~93% share emerges cleanly on near-symmetric channels
    const MmfSolution sym = sca_solve(
        make_instance(ChannelState{{1.0, 1.0}, 1.0}, 1, FblParams::finite(1500, kEps), 100.0));
    info(fmt("symmetric-gains instance split share: %.3f",
             sym.powers.powers[0] / (sym.powers.powers[0] + sym.powers.powers[2])));
    info(fmt("paper-literal B/N medians: 20dB %.3f, 30dB %.3f",
             median_split_share(chs, paper_literal_fbl(1500, kEps), budget_of(20)),
             median_split_share(chs, paper_literal_fbl(1500, kEps), budget_of(30))));
}

// ---- criterion 4: splitting-count gain ----------------------------------

void criterion4() {
    const auto chs = generate_rayleigh(4, 100, kSeed);
    auto run = [&](const FblParams& fbl) {
        double m[4] = {0, 0, 0, 0};
        for (int j = 1; j <= 3; ++j) m[j] = mean_rsma(chs, j, fbl, budget_of(20));
        const double gain = relative_gain(m[3], m[1]);
        const bool monotone = m[1] <= m[2] + 1e-6 && m[2] <= m[3] + 1e-6;
        const bool pass = gain > 0.0 && gain >= 4.0 && gain <= 12.0 && monotone;
        return std::tuple<bool, double, std::string>(
            pass, gain,
            fmt("means j1=%.4f j2=%.4f j3=%.4f gain=%.2f%% monotone=%d", m[1], m[2], m[3], gain,
                monotone));
    };
    const auto spec = run(FblParams::finite(250, kEps));
    report(4, "K=4 gain of |J|=3 over |J|=1 in [4%,12%], monotone in |J|", std::get<0>(spec),
           std::get<2>(spec));
    const auto lit = run(paper_literal_fbl(250, kEps));
    info(fmt("paper-literal B/N penalty: %s", std::get<2>(lit).c_str()));
}

// ---- criterion 5: user-count trend --------------------------------------

void criterion5() {
    auto run = [&](bool literal) {
        std::vector<double> rsma, noma;
        for (int k = 2; k <= 5; ++k) {
            const auto chs = generate_rayleigh(k, 100, kSeed);
            rsma.push_back(mean_rsma(chs, 1,
                                     literal ? paper_literal_fbl(1500, kEps)
                                             : FblParams::finite(1500, kEps),
                                     budget_of(20)));
            noma.push_back(mean_noma(chs, FblParams::infinite(kEps), budget_of(20)));
        }
        bool decreasing = true, dominates = true;
        std::string detail;
        for (size_t i = 0; i < rsma.size(); ++i) {
            if (i > 0) decreasing = decreasing && rsma[i] < rsma[i - 1] && noma[i] < noma[i - 1];
            dominates = dominates && rsma[i] >= noma[i];
            detail += fmt("K%zu r=%.4f n=%.4f; ", i + 2, rsma[i], noma[i]);
        }
        return std::tuple<bool, bool, std::string>(decreasing, dominates, detail);
    };
    const auto spec = run(false);
    report(5, "mean MMF decreases in K and FBL RSMA (N=1500) >= IFBL NOMA at each K",
           std::get<0>(spec) && std::get<1>(spec),
           fmt("decreasing=%d dominates=%d | %s", std::get<0>(spec), std::get<1>(spec),
               std::get<2>(spec).c_str()));
    const auto lit = run(true);
    info(fmt("paper-literal B/N penalty: decreasing=%d dominates=%d | %s", std::get<0>(lit),
             std::get<1>(lit), std::get<2>(lit).c_str()));
}

// ---- criterion 6: oracle equivalence ------------------------------------

void criterion6() {
    const auto chs = generate_rayleigh(2, 20, kSeed + 6);
    bool pass = true;
    std::string detail;
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        const int split = i % 2;
        FblParams fbl = FblParams::infinite(kEps);
        if (i % 4 < 2) fbl = FblParams::finite(i % 2 ? 1500.0 : 250.0, kEps);
        const double snr = 10.0 + 5.0 * (i % 4);
        const MmfInstance inst =
            make_instance(chs[static_cast<size_t>(i)], split, fbl, budget_of(snr));
        const double sca = sca_solve(inst).t_star;
        const double oracle = grid_oracle_k2(inst, 1e-3).best_value;
        const double rel = std::abs(sca - oracle) / std::max(oracle, 1e-9);
        worst = std::max(worst, rel);
        if (rel > 0.02) {
            pass = false;
            detail += fmt("#%d rel=%.3f%%; ", i, 100.0 * rel);
        }
    }
    SolverConfig tight;
    tight.tol_tau = 1e-5;
    const double closed =
        noma_solve(ChannelState{{1.0, 1.0}, 1.0}, FblParams::infinite(kEps), 100.0, tight).t_star;
    const bool closed_ok = std::abs(closed - 3.3940328245) <= 1e-3;
    pass = pass && closed_ok;
    report(6, "sca within 2% of the exhaustive grid oracle; NOMA closed form within 1e-3", pass,
           fmt("worst relative gap %.4f%%; closed form %.6f (target 3.394033); %s",
               100.0 * worst, closed, detail.empty() ? "all 20 within 2%" : detail.c_str()));
}

// ---- criterion 7: property suites ---------------------------------------

void criterion7() {
    bool pass = true;
    std::string detail;

    const TangentCheckReport tangent = tangent_bound_check(10000, 1e3);
    if (!tangent.passed) {
        pass = false;
        detail += fmt("tangent violations=%d; ", tangent.violations);
    }

    int mono_bad = 0, cert_bad = 0, not_converged = 0;
    for (int k : {2, 3, 4}) {
        const auto chs = generate_rayleigh(k, 34, kSeed + static_cast<std::uint64_t>(k));
        for (const auto& ch : chs) {
            const MmfInstance inst = make_instance(ch, 1, FblParams::finite(500, kEps), 100.0);
            const MmfSolution sol = sca_solve(inst);
            for (size_t i = 1; i < sol.t_trace.size(); ++i)
                if (sol.t_trace[i] < sol.t_trace[i - 1] - 1e-6) ++mono_bad;
            if (!sol.converged) ++not_converged;
            if (sol.converged && certify_solution(sol, inst).rate_slack > 1e-4) ++cert_bad;
        }
    }
    if (mono_bad || cert_bad || not_converged) {
        pass = false;
        detail += fmt("mono=%d cert=%d unconverged=%d; ", mono_bad, cert_bad, not_converged);
    }

    int embed_bad = 0;
    {
        const auto chs = generate_rayleigh(2, 100, kSeed + 7);
        for (const auto& ch : chs) {
            const FblParams fbl = FblParams::finite(1500, kEps);
            const double r = sca_solve(make_instance(ch, 1, fbl, 100.0)).t_star;
            const double n = noma_solve(ch, fbl, 100.0).t_star;
            if (r < n - 1e-3) ++embed_bad;
        }
    }
    if (embed_bad) {
        pass = false;
        detail += fmt("embedding violations=%d/100; ", embed_bad);
    }

    SweepConfig cfg;
    cfg.num_users = 2;
    cfg.snr_db_list = {0.0, 20.0};
    cfg.blocklength_list = {500.0};
    cfg.schemes = {SchemeTag::rsma, SchemeTag::noma};
    cfg.split_counts = {1};
    cfg.realizations = 20;
    cfg.seed = kSeed;
    std::ostringstream a, b;
    write_csv(a, run_sweep(cfg, {1, false}).rows);
    write_csv(b, run_sweep(cfg, {1, false}).rows);
    if (a.str() != b.str()) {
        pass = false;
        detail += "csv not byte-identical; ";
    }

    report(7, "property suites: tangent, monotone SCA, certification, embedding, determinism",
           pass, pass ? "10000 tangent samples, 102 instances, 100 pairs, csv identical" : detail);
}

// ---- criterion 8: kernel correctness ------------------------------------

void criterion8() {
    bool pass = true;
    std::string detail;

    ConvexProgram p1;
    p1.num_vars = 2;
    p1.objective_index = 1;
    p1.lower_bounds = {0.0, -std::numeric_limits<double>::infinity()};
    p1.affine_inequalities.push_back({{1.0, 0.0}, -3.0});
    p1.log_rate_constraints.push_back({{0}, {}, 0.0, 1});
    const KernelResult r1 = solve_max_t(p1, 1e-8);
    if (!(r1.status == KernelStatus::optimal && r1.kkt_residual <= 1e-8 &&
          std::abs(r1.objective - 2.0) < 1e-6)) {
        pass = false;
        detail += fmt("chain: t=%.8f kkt=%.2e; ", r1.objective, r1.kkt_residual);
    }

    ConvexProgram p2 = p1;
    p2.affine_inequalities[0].constant = -10.0;
    p2.log_rate_constraints[0].penalty_coef = {0.1, 0.0};
    const KernelResult r2 = solve_max_t(p2, 1e-8);
    if (!(r2.status == KernelStatus::optimal && r2.kkt_residual <= 1e-8 &&
          std::abs(r2.objective - 2.4594316186) < 1e-6)) {
        pass = false;
        detail += fmt("penalized: t=%.8f kkt=%.2e; ", r2.objective, r2.kkt_residual);
    }

    ConvexProgram bad = p1;
    bad.lower_bounds[0] = 2.0;
    bad.affine_inequalities[0].constant = -1.0;  // x <= 1 with x >= 2
    if (solve_max_t(bad, 1e-6).status != KernelStatus::infeasible) {
        pass = false;
        detail += "infeasible box not flagged; ";
    }

    report(8, "analytic programs to KKT residual <= 1e-8; infeasible program flagged", pass,
           pass ? fmt("kkt %.2e and %.2e", r1.kkt_residual, r2.kkt_residual) : detail);
}

// ---- criterion 9: performance envelope ----------------------------------

void criterion9() {
    SweepConfig cfg;
    cfg.num_users = 4;
    cfg.snr_db_list = snr_grid();
    cfg.blocklength_list = {250.0};
    cfg.epsilon = kEps;
    // rsma expands over split_counts: series are rsma_j1, rsma_j3, noma, tin
    cfg.schemes = {SchemeTag::rsma, SchemeTag::noma, SchemeTag::tin};
    cfg.split_counts = {1, 3};
    cfg.realizations = 100;
    cfg.seed = kSeed;

    const auto t0 = std::chrono::steady_clock::now();
    const SweepResult res = run_sweep(cfg, {1, true});
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = sec < 600.0 && !res.any_failed &&
                      res.rows.size() == 4ull * 7ull * 100ull;
    report(9, "K=4 4-series 7-SNR 100-realization sweep under 10 minutes", pass,
           fmt("%zu cells in %.1f s", res.rows.size(), sec));
}

}  // namespace

int main() {
    std::printf("acceptance suite: K-user uplink rate-splitting max-min fairness\n");
    std::printf("dispersion penalty convention: B/sqrt(N) (normal approximation)\n\n");
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    criterion9();
    std::printf("\n%d of 9 criteria failed\n", g_failures);
    return g_failures;
}
