// mmf: max-min fair power allocation for K-user uplink rate splitting under
// finite-blocklength rate constraints.
//
//   mmf solve   one instance (fixed gains or a seeded Rayleigh draw)
//   mmf sweep   Monte Carlo sweep from a key=value config file
//   mmf verify  brute-force verification oracles
//
// Exit codes: 0 success, 2 config/usage error, 3 solver failure in any cell.

#include "CLI11.hpp"

#include "mmf/baselines.hpp"
#include "mmf/experiments.hpp"
#include "mmf/oracle.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

double parse_blocklength(const std::string& s) {
    if (s == "inf" || s == "infinite") return std::numeric_limits<double>::infinity();
    return std::stod(s);
}

std::vector<double> parse_gains(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    return out;
}

int run_solve(int users, int split, const std::string& gains_csv, std::uint64_t seed,
              double snr_db, const std::string& blocklength, double epsilon,
              const std::string& scheme, const std::string& order_policy, double tol) {
    mmf::ChannelState channel;
    if (!gains_csv.empty()) {
        channel.gains = parse_gains(gains_csv);
    } else {
        channel = mmf::generate_rayleigh(users, 1, seed)[0];
    }
    const int k = channel.num_users();

    const double n = parse_blocklength(blocklength);
    const mmf::FblParams fbl = std::isinf(n) ? mmf::FblParams::infinite(epsilon)
                                             : mmf::FblParams::finite(n, epsilon);
    const double budget = std::pow(10.0, snr_db / 10.0) * channel.noise_power;

    mmf::SolverConfig cfg;
    cfg.tol_tau = tol;

    const mmf::SchemeTag tag = mmf::parse_scheme(scheme);
    mmf::MmfSolution sol;
    mmf::MmfInstance inst;
    switch (tag) {
        case mmf::SchemeTag::rsma: {
            inst = mmf::make_instance(channel, split, fbl, budget);
            if (order_policy == "exhaustive") {
                if (inst.num_streams() > 7)
                    throw mmf::ConfigError("exhaustive order needs <= 7 streams");
                const mmf::OracleReport rep = mmf::order_oracle(inst, cfg);
                inst.order.order = rep.best_order;
            } else if (order_policy != "heuristic") {
                throw mmf::ConfigError("unknown order policy: " + order_policy);
            }
            sol = mmf::sca_solve(inst, cfg);
            break;
        }
        case mmf::SchemeTag::noma:
            inst = mmf::make_instance(channel, 0, fbl, budget);
            sol = mmf::noma_solve(channel, fbl, budget, cfg);
            break;
        case mmf::SchemeTag::tin:
            inst = mmf::make_instance(channel, 0, fbl, budget);
            sol = mmf::tin_solve(channel, fbl, budget, cfg);
            break;
    }

    std::printf("instance: K=%d scheme=%s split=%d snr=%g dB blocklength=%s epsilon=%g\n", k,
                scheme.c_str(), inst.partition.split_count(), snr_db,
                std::isinf(n) ? "inf" : blocklength.c_str(), epsilon);
    std::printf("gains:");
    for (double g : channel.gains) std::printf(" %.6g", g);
    std::printf("   budget P_t=%.6g noise=%.6g\n", budget, channel.noise_power);
    std::printf("t* = %.6f bits/channel use   converged=%s iterations=%d certificate=%.3g\n",
                sol.t_star, sol.converged ? "yes" : "no", sol.iterations, sol.certificate);
    std::printf("user rates:");
    for (size_t u = 0; u < sol.user_rates.size(); ++u)
        std::printf(" R%zu=%.6f", u + 1, sol.user_rates[u]);
    std::printf("\nstream powers:");
    for (int g = 0; g < inst.num_streams(); ++g)
        std::printf(" %s=%.6g", mmf::to_string(inst.order.order[static_cast<size_t>(g)]).c_str(),
                    sol.powers.powers[static_cast<size_t>(g)]);
    std::printf("\n");
    return 0;
}

int run_sweep_cmd(const std::string& config_path, const std::string& out_dir,
                  std::uint64_t seed, bool seed_given, int jobs, bool no_timing) {
    mmf::SweepConfig cfg = mmf::load_sweep_config(config_path);
    if (seed_given) cfg.seed = seed;

    mmf::SweepOptions opts;
    opts.jobs = jobs;
    opts.record_timing = !no_timing;
    const mmf::SweepResult res = mmf::run_sweep(cfg, opts);

    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    {
        std::ofstream out(fs::path(out_dir) / "results.csv");
        if (!out) throw mmf::ConfigError("cannot write to output directory: " + out_dir);
        mmf::write_csv(out, res.rows);
    }
    mmf::write_mean_tables(out_dir, cfg, res.rows);
    std::printf("%zu rows -> %s/results.csv\n", res.rows.size(), out_dir.c_str());
    if (res.any_failed) {
        std::fprintf(stderr, "warning: at least one cell failed; rows were still written\n");
        return 3;
    }
    return 0;
}

int run_verify(int samples, int grid_instances, double resolution, int order_instances,
               std::uint64_t seed) {
    bool ok = true;

    const mmf::TangentCheckReport tangent = mmf::tangent_bound_check(samples, 1e3, seed);
    std::printf("[%s] tangent bound: %d samples, %d violations, worst gap %.3g\n",
                tangent.passed ? "ok" : "FAIL", tangent.samples, tangent.violations,
                tangent.worst_gap);
    ok = ok && tangent.passed;

    const auto channels = mmf::generate_rayleigh(2, grid_instances, seed);
    for (int i = 0; i < grid_instances; ++i) {
        const int split = i % 2;
        const mmf::FblParams fbl = (i % 4 < 2) ? mmf::FblParams::finite(1500, 1e-5)
                                               : mmf::FblParams::infinite(1e-5);
        const mmf::MmfInstance inst = mmf::make_instance(channels[static_cast<size_t>(i)],
                                                         split, fbl, 100.0);
        const double sca = mmf::sca_solve(inst).t_star;
        mmf::OracleReport rep = mmf::grid_oracle_k2(inst, resolution);
        rep.solver_value = sca;
        rep.delta = rep.best_value - sca;
        const bool pass = std::abs(rep.delta) <= 0.02 * std::max(rep.best_value, 1e-6);
        std::printf("[%s] grid oracle #%d (split=%d, %s): oracle %.6f vs sca %.6f (delta %+.2e)\n",
                    pass ? "ok" : "FAIL", i, split, fbl.is_finite() ? "fbl" : "ifbl",
                    rep.best_value, sca, rep.delta);
        ok = ok && pass;
    }

    const auto order_channels = mmf::generate_rayleigh(2, order_instances, seed + 1);
    for (int i = 0; i < order_instances; ++i) {
        const mmf::MmfInstance inst = mmf::make_instance(order_channels[static_cast<size_t>(i)],
                                                         1, mmf::FblParams::finite(500, 1e-5),
                                                         100.0);
        const mmf::OracleReport rep = mmf::order_oracle(inst);
        const double gap = rep.delta / std::max(rep.best_value, 1e-9);
        const bool pass = gap <= 0.05;
        std::printf("[%s] order oracle #%d: best %.6f heuristic %.6f (gap %.2f%%, %llu orders)\n",
                    pass ? "ok" : "FAIL", i, rep.best_value, rep.solver_value, 100.0 * gap,
                    static_cast<unsigned long long>(rep.grid_points));
        ok = ok && pass;
    }

    std::printf("verify: %s\n", ok ? "all bounds hold" : "BOUND VIOLATION");
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"max-min fair uplink rate-splitting power allocation"};
    app.require_subcommand(1);

    // solve
    auto* solve = app.add_subcommand("solve", "solve one instance");
    int users = 2, split = 1;
    std::string gains_csv;
    std::uint64_t seed = 1;
    double snr_db = 20.0, epsilon = 1e-5, tol = 1e-3;
    std::string blocklength = "inf", scheme = "rsma", order_policy = "heuristic";
    solve->add_option("--users", users, "number of users K");
    solve->add_option("--split", split, "number of splitting users (rsma)");
    solve->add_option("--gains", gains_csv, "comma-separated |h_k|^2 (overrides --users/--seed)");
    solve->add_option("--seed", seed, "Rayleigh draw seed when --gains is absent");
    solve->add_option("--snr-db", snr_db, "transmit SNR in dB (P_t = 10^(snr/10) * noise)");
    solve->add_option("--blocklength", blocklength, "blocklength N or 'inf'");
    solve->add_option("--epsilon", epsilon, "block error probability");
    solve->add_option("--scheme", scheme, "rsma | noma | tin");
    solve->add_option("--order", order_policy, "heuristic | exhaustive");
    solve->add_option("--tol", tol, "SCA convergence tolerance");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "run a Monte Carlo sweep");
    std::string config_path, out_dir;
    std::uint64_t sweep_seed = 0;
    int jobs = 1;
    bool no_timing = false;
    sweep->add_option("--config", config_path, "key=value config file")->required();
    sweep->add_option("--out", out_dir, "output directory")->required();
    auto* seed_opt = sweep->add_option("--seed", sweep_seed, "override the config seed");
    sweep->add_option("--jobs", jobs, "parallel workers");
    sweep->add_flag("--no-timing", no_timing, "zero wall_ms for byte-stable output");

    // verify
    auto* verify = app.add_subcommand("verify", "run the brute-force oracles");
    int samples = 10000, grid_instances = 8, order_instances = 5;
    double resolution = 1e-3;
    std::uint64_t verify_seed = 424242;
    verify->add_option("--samples", samples, "tangent bound samples");
    verify->add_option("--instances", grid_instances, "grid-oracle instances");
    verify->add_option("--resolution", resolution, "grid resolution");
    verify->add_option("--orders", order_instances, "order-oracle instances");
    verify->add_option("--seed", verify_seed, "channel seed");

    try {
        app.parse(argc, argv);
        if (solve->parsed())
            return run_solve(users, split, gains_csv, seed, snr_db, blocklength, epsilon,
                             scheme, order_policy, tol);
        if (sweep->parsed())
            return run_sweep_cmd(config_path, out_dir, sweep_seed, !seed_opt->empty(), jobs,
                                 no_timing);
        if (verify->parsed())
            return run_verify(samples, grid_instances, resolution, order_instances, verify_seed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const mmf::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
