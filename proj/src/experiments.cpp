#include "mmf/experiments.hpp"

#include "mmf/oracle.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <thread>

namespace mmf {

namespace {

// 53-bit uniform in [0,1) from a pinned engine; the standard distribution
// adaptors are implementation-defined, this is not.
double u01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, ',')) {
        cur = trim(cur);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

double parse_double(const std::string& s) {
    if (s == "inf" || s == "infinite") return std::numeric_limits<double>::infinity();
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw ConfigError("bad numeric value: " + s);
    return v;
}

int parse_int(const std::string& s) {
    size_t pos = 0;
    int v = std::stoi(s, &pos);
    if (pos != s.size()) throw ConfigError("bad integer value: " + s);
    return v;
}

struct Series {
    SchemeKind kind;
};

std::vector<Series> expand_series(const SweepConfig& cfg) {
    std::vector<Series> out;
    for (SchemeTag tag : cfg.schemes) {
        if (tag == SchemeTag::rsma) {
            for (int split : cfg.split_counts) out.push_back({SchemeKind{tag, split}});
        } else {
            out.push_back({SchemeKind{tag, 0}});
        }
    }
    return out;
}

// Exhaustive-order RSMA solve: best solution over every SIC permutation.
MmfSolution solve_best_order(const MmfInstance& instance, const SolverConfig& config) {
    std::vector<StreamId> streams = instance.order.order;
    auto key = [](const StreamId& id) { return id.user * 4 + static_cast<int>(id.part); };
    auto less = [&](const StreamId& a, const StreamId& b) { return key(a) < key(b); };
    std::sort(streams.begin(), streams.end(), less);
    MmfSolution best;
    bool have = false;
    do {
        MmfInstance cand = instance;
        cand.order.order = streams;
        MmfSolution sol = sca_solve(cand, config);
        if (!have || sol.t_star > best.t_star) {
            best = std::move(sol);
            have = true;
        }
    } while (std::next_permutation(streams.begin(), streams.end(), less));
    return best;
}

std::string format_double(double v) {
    if (std::isinf(v)) return "inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::vector<ChannelState> generate_rayleigh(int num_users, int realizations,
                                            std::uint64_t seed) {
    if (num_users < 1) throw std::invalid_argument("generate_rayleigh: num_users < 1");
    if (realizations < 1) throw std::invalid_argument("generate_rayleigh: realizations < 1");
    std::vector<ChannelState> out;
    out.reserve(static_cast<size_t>(realizations));
    for (int r = 0; r < realizations; ++r) {
        std::mt19937_64 rng(splitmix64(seed + static_cast<std::uint64_t>(r)));
        ChannelState ch;
        ch.gains.reserve(static_cast<size_t>(num_users));
        for (int k = 0; k < num_users; ++k)
            ch.gains.push_back(-std::log1p(-u01(rng)));  // Exp(1) by inversion
        out.push_back(std::move(ch));
    }
    return out;
}

void SweepConfig::validate() const {
    if (snr_db_list.empty()) throw std::invalid_argument("SweepConfig: snr list empty");
    if (blocklength_list.empty()) throw std::invalid_argument("SweepConfig: blocklength list empty");
    for (double n : blocklength_list)
        if (!(n >= 1.0)) throw std::invalid_argument("SweepConfig: blocklength must be >= 1 or inf");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("SweepConfig: epsilon outside (0,1)");
    if (num_users < 1) throw std::invalid_argument("SweepConfig: num_users < 1");
    if (realizations < 1) throw std::invalid_argument("SweepConfig: realizations < 1");
    if (schemes.empty()) throw std::invalid_argument("SweepConfig: schemes empty");
    bool has_rsma = false;
    for (SchemeTag t : schemes) has_rsma = has_rsma || t == SchemeTag::rsma;
    if (has_rsma && split_counts.empty())
        throw std::invalid_argument("SweepConfig: rsma scheme without split_counts");
    for (int s : split_counts) {
        if (s < 0 || s > num_users)
            throw std::invalid_argument("SweepConfig: split_count outside [0, K]");
        if (order_policy == OrderPolicy::exhaustive && num_users + s > 7)
            throw std::invalid_argument("SweepConfig: exhaustive order needs <= 7 streams");
    }
    if (!(tol_tau > 0.0)) throw std::invalid_argument("SweepConfig: tol must be > 0");
}

SweepConfig parse_sweep_config(std::istream& in) {
    SweepConfig cfg;
    cfg.schemes.clear();
    cfg.split_counts.clear();
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "users") {
                cfg.num_users = parse_int(value);
            } else if (key == "snr_db") {
                cfg.snr_db_list.clear();
                for (const auto& v : split_list(value)) cfg.snr_db_list.push_back(parse_double(v));
            } else if (key == "blocklength") {
                cfg.blocklength_list.clear();
                for (const auto& v : split_list(value)) cfg.blocklength_list.push_back(parse_double(v));
            } else if (key == "epsilon") {
                cfg.epsilon = parse_double(value);
            } else if (key == "split_counts") {
                for (const auto& v : split_list(value)) cfg.split_counts.push_back(parse_int(v));
            } else if (key == "schemes") {
                for (const auto& v : split_list(value)) cfg.schemes.push_back(parse_scheme(v));
            } else if (key == "realizations") {
                cfg.realizations = parse_int(value);
            } else if (key == "seed") {
                cfg.seed = std::stoull(value);
            } else if (key == "order") {
                if (value == "heuristic") cfg.order_policy = OrderPolicy::heuristic;
                else if (value == "exhaustive") cfg.order_policy = OrderPolicy::exhaustive;
                else throw ConfigError("unknown order policy: " + value);
            } else if (key == "tol") {
                cfg.tol_tau = parse_double(value);
            } else {
                throw ConfigError("unknown key: " + key);
            }
        } catch (const std::invalid_argument& e) {
            throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (cfg.schemes.empty()) cfg.schemes = {SchemeTag::rsma, SchemeTag::noma};
    if (cfg.split_counts.empty()) cfg.split_counts = {1};
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

SweepConfig load_sweep_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return parse_sweep_config(in);
}

SweepResult run_sweep(const SweepConfig& config, const SweepOptions& options) {
    config.validate();
    const std::vector<Series> series = expand_series(config);
    const std::vector<ChannelState> channels =
        generate_rayleigh(config.num_users, config.realizations, config.seed);

    const size_t total = series.size() * config.blocklength_list.size() *
                         config.snr_db_list.size() * static_cast<size_t>(config.realizations);
    SweepResult result;
    result.rows.resize(total);

    SolverConfig solver_cfg;
    solver_cfg.tol_tau = config.tol_tau;

    auto run_cell = [&](size_t index) {
        size_t rest = index;
        const int r = static_cast<int>(rest % static_cast<size_t>(config.realizations));
        rest /= static_cast<size_t>(config.realizations);
        const double snr_db = config.snr_db_list[rest % config.snr_db_list.size()];
        rest /= config.snr_db_list.size();
        const double n = config.blocklength_list[rest % config.blocklength_list.size()];
        rest /= config.blocklength_list.size();
        const SchemeKind kind = series[rest].kind;

        ResultRow& row = result.rows[index];
        row.scheme = kind.label();
        row.num_users = config.num_users;
        row.split_count = kind.split_count;
        row.snr_db = snr_db;
        row.blocklength = n;
        row.epsilon = config.epsilon;
        row.realization = r;
        row.seed = splitmix64(config.seed + static_cast<std::uint64_t>(r));

        const ChannelState& channel = channels[static_cast<size_t>(r)];
        const double budget = std::pow(10.0, snr_db / 10.0) * channel.noise_power;
        const FblParams fbl = std::isinf(n) ? FblParams::infinite(config.epsilon)
                                            : FblParams::finite(n, config.epsilon);

        const auto t0 = std::chrono::steady_clock::now();
        try {
            MmfSolution sol;
            switch (kind.tag) {
                case SchemeTag::rsma: {
                    MmfInstance inst = make_instance(channel, kind.split_count, fbl, budget);
                    sol = config.order_policy == OrderPolicy::exhaustive
                              ? solve_best_order(inst, solver_cfg)
                              : sca_solve(inst, solver_cfg);
                    break;
                }
                case SchemeTag::noma: sol = noma_solve(channel, fbl, budget, solver_cfg); break;
                case SchemeTag::tin: sol = tin_solve(channel, fbl, budget, solver_cfg); break;
            }
            row.min_rate = sol.t_star;
            row.converged = sol.converged;
            row.iterations = sol.iterations;
        } catch (const std::exception&) {
            row.failed = true;
            row.min_rate = 0.0;
            row.converged = false;
        }
        if (options.record_timing) {
            const auto t1 = std::chrono::steady_clock::now();
            row.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        }
    };

    const int jobs = std::max(1, options.jobs);
    if (jobs == 1) {
        for (size_t i = 0; i < total; ++i) run_cell(i);
    } else {
        std::vector<std::thread> workers;
        workers.reserve(static_cast<size_t>(jobs));
        for (int w = 0; w < jobs; ++w)
            workers.emplace_back([&, w] {
                for (size_t i = static_cast<size_t>(w); i < total; i += static_cast<size_t>(jobs))
                    run_cell(i);
            });
        for (auto& t : workers) t.join();
    }

    for (const ResultRow& row : result.rows) result.any_failed = result.any_failed || row.failed;
    return result;
}

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
    out << "scheme,K,split_count,snr_db,blocklength,epsilon,realization,seed,"
           "min_rate,converged,iterations,wall_ms\n";
    char buf[64];
    for (const ResultRow& r : rows) {
        out << r.scheme << ',' << r.num_users << ',' << r.split_count << ','
            << format_double(r.snr_db) << ',' << format_double(r.blocklength) << ','
            << format_double(r.epsilon) << ',' << r.realization << ',' << r.seed << ','
            << format_double(r.min_rate) << ',' << (r.converged ? 1 : 0) << ','
            << r.iterations << ',';
        std::snprintf(buf, sizeof buf, "%.3f", r.wall_ms);
        out << buf << '\n';
    }
}

void write_mean_tables(const std::string& dir, const SweepConfig& config,
                       const std::vector<ResultRow>& rows) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const std::vector<Series> series = expand_series(config);
    for (double n : config.blocklength_list) {
        std::string label = std::isinf(n) ? "inf" : format_double(n);
        std::ofstream out(fs::path(dir) / ("means_N" + label + ".dat"));
        out << "# snr_db";
        for (const Series& s : series) {
            out << ' ' << s.kind.label();
            if (s.kind.tag == SchemeTag::rsma) out << "_j" << s.kind.split_count;
        }
        out << '\n';
        for (double snr : config.snr_db_list) {
            out << format_double(snr);
            for (const Series& s : series)
                out << ' '
                    << format_double(mean_min_rate(rows, s.kind.label(), s.kind.split_count,
                                                   snr, n));
            out << '\n';
        }
    }
}

double relative_gain(double r_rsma, double r_noma) {
    if (r_noma == 0.0) throw std::domain_error("relative_gain: reference rate is zero");
    return (r_rsma - r_noma) / r_noma * 100.0;
}

double mean_min_rate(const std::vector<ResultRow>& rows, const std::string& scheme,
                     int split_count, double snr_db, double blocklength) {
    double sum = 0.0;
    int n = 0;
    for (const ResultRow& r : rows) {
        const bool same_n = (std::isinf(r.blocklength) && std::isinf(blocklength)) ||
                            r.blocklength == blocklength;
        if (r.scheme == scheme && r.split_count == split_count && r.snr_db == snr_db && same_n) {
            sum += r.min_rate;
            ++n;
        }
    }
    return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / n;
}

}  // namespace mmf
