#include "mmf/sca.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mmf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Interference set of stream g: downstream streams under SIC, everyone else
// under TIN.
template <typename Fn>
void for_each_interferer(int stream, int num_streams, SinrMode mode, Fn&& fn) {
    if (mode == SinrMode::sic) {
        for (int i = stream + 1; i < num_streams; ++i) fn(i);
    } else {
        for (int i = 0; i < num_streams; ++i)
            if (i != stream) fn(i);
    }
}

double stream_gain(const MmfInstance& inst, int stream) {
    return inst.channel.gains[static_cast<size_t>(
        inst.order.order[static_cast<size_t>(stream)].user)];
}

UserRates true_user_rates(const MmfInstance& inst, const std::vector<double>& powers,
                          SinrMode mode) {
    PowerAllocation alloc{powers, inst.budget};
    const auto metrics = evaluate_streams(inst.order, alloc, inst.channel, inst.fbl, mode);
    std::vector<double> rates(metrics.size());
    for (size_t i = 0; i < metrics.size(); ++i) rates[i] = metrics[i].rate;
    return user_min_rate(rates, inst.order, inst.partition);
}

// Strictly interior warm start near the expansion point; solve_max_t falls
// back to phase 1 when the shifted point is not strictly feasible.
std::vector<double> warm_start_near(const SubproblemLayout& layout,
                                    const LinearizationState& state,
                                    const MmfInstance& inst, double rho_floor) {
    const int s = layout.num_streams;
    std::vector<double> x(static_cast<size_t>(layout.program.num_vars), 0.0);
    for (int g = 0; g < s; ++g) {
        x[static_cast<size_t>(layout.power_index(g))] =
            std::max(state.powers_n[static_cast<size_t>(g)] * (1.0 - 1e-6), 1e-8);
        x[static_cast<size_t>(layout.rho_index(g))] =
            std::max(state.rho_n[static_cast<size_t>(g)] * (1.0 - 1e-4), rho_floor * 2.0);
    }
    // objective variable below every approximated user rate
    double tmin = kInf;
    for (const auto& lr : layout.program.log_rate_constraints) {
        double f = -lr.penalty_const;
        for (int j : lr.rho_indices) f += std::log1p(x[static_cast<size_t>(j)]) / std::log(2.0);
        if (!lr.penalty_coef.empty())
            for (int j = 0; j < layout.program.num_vars; ++j)
                f -= lr.penalty_coef[static_cast<size_t>(j)] * x[static_cast<size_t>(j)];
        tmin = std::min(tmin, f);
    }
    x[static_cast<size_t>(layout.t_index())] = tmin - std::max(0.5, 0.1 * std::abs(tmin));
    (void)inst;
    return x;
}

}  // namespace

AffineForm dispersion_tangent(double rho_n) {
    if (!(rho_n > 0.0)) throw std::invalid_argument("dispersion_tangent: rho_n must be > 0");
    const double a = 1.0 + rho_n;
    const double v = 1.0 - 1.0 / (a * a);
    const double sqrt_v = std::sqrt(v);
    const double slope = 1.0 / (a * a * a * sqrt_v);
    return AffineForm{sqrt_v - slope * rho_n, slope};
}

double linearize_dispersion(double rho, double rho_n) {
    return dispersion_tangent(rho_n).eval(rho);
}

LinearizationState make_linearization(int iter, std::vector<double> powers_n,
                                      std::vector<double> rho_n) {
    if (powers_n.size() != rho_n.size())
        throw std::invalid_argument("make_linearization: power/rho size mismatch");
    LinearizationState st;
    st.iter = iter;
    st.powers_n = std::move(powers_n);
    st.rho_n = std::move(rho_n);
    st.phi.reserve(st.rho_n.size());
    for (double r : st.rho_n) st.phi.push_back(dispersion_tangent(r));
    return st;
}

void MmfInstance::validate() const {
    channel.validate();
    partition.validate();
    if (channel.num_users() != partition.num_users)
        throw std::invalid_argument("MmfInstance: channel/partition size mismatch");
    if (!is_valid_order(order, partition))
        throw std::invalid_argument("MmfInstance: order is not a permutation of the streams");
    if (!(budget > 0.0)) throw std::invalid_argument("MmfInstance: budget must be > 0");
}

MmfInstance make_instance(ChannelState channel, int split_count, FblParams fbl,
                          double budget) {
    MmfInstance inst;
    inst.partition = make_partition(channel, split_count);
    inst.order = build_decoding_order(inst.partition, channel);
    inst.channel = std::move(channel);
    inst.fbl = fbl;
    inst.budget = budget;
    inst.validate();
    return inst;
}

std::pair<std::vector<double>, std::vector<double>> initialize(
    const MmfInstance& instance, double split_fraction, SinrMode mode, double rho_floor) {
    instance.validate();
    if (!(split_fraction > 0.0) || !(split_fraction < 1.0))
        throw std::invalid_argument("initialize: split_fraction must lie in (0,1)");
    const int s = instance.num_streams();
    std::vector<double> p(static_cast<size_t>(s));
    for (int g = 0; g < s; ++g) {
        switch (instance.order.order[static_cast<size_t>(g)].part) {
            case StreamPart::whole: p[static_cast<size_t>(g)] = instance.budget; break;
            case StreamPart::split1: p[static_cast<size_t>(g)] = split_fraction * instance.budget; break;
            case StreamPart::split2: p[static_cast<size_t>(g)] = (1.0 - split_fraction) * instance.budget; break;
        }
    }
    PowerAllocation alloc{p, instance.budget};
    std::vector<double> rho = compute_sinr(instance.order, alloc, instance.channel, mode);
    for (double& r : rho) r = std::max(r, rho_floor);
    return {std::move(p), std::move(rho)};
}

AffineInequality linearize_sinr_constraint(int stream, const LinearizationState& state,
                                           const MmfInstance& instance, SinrMode mode) {
    const int s = instance.num_streams();
    if (state.rho_n.size() != static_cast<size_t>(s))
        throw std::invalid_argument("linearize_sinr_constraint: state/instance size mismatch");
    const double rho_n = state.rho_n[static_cast<size_t>(stream)];
    if (!(rho_n > 0.0)) throw std::invalid_argument("linearize_sinr_constraint: rho_n must be > 0");
    const double p_n = state.powers_n[static_cast<size_t>(stream)];
    const double gain_g = stream_gain(instance, stream);

    AffineInequality out;
    out.coef.assign(static_cast<size_t>(2 * s + 1), 0.0);
    for_each_interferer(stream, s, mode, [&](int i) {
        out.coef[static_cast<size_t>(i)] += stream_gain(instance, i);
    });
    out.coef[static_cast<size_t>(stream)] += -gain_g / rho_n;
    out.coef[static_cast<size_t>(s + stream)] = p_n * gain_g / (rho_n * rho_n);
    out.constant = instance.channel.noise_power - p_n * gain_g / rho_n;
    return out;
}

SubproblemLayout assemble_subproblem(const LinearizationState& state,
                                     const MmfInstance& instance, SinrMode mode) {
    instance.validate();
    const int s = instance.num_streams();
    if (state.rho_n.size() != static_cast<size_t>(s) ||
        state.powers_n.size() != static_cast<size_t>(s))
        throw std::invalid_argument("assemble_subproblem: state/instance size mismatch");

    SubproblemLayout layout;
    layout.num_streams = s;
    ConvexProgram& prog = layout.program;
    prog.num_vars = 2 * s + 1;
    prog.objective_index = layout.t_index();

    const double scale = instance.fbl.penalty_scale();  // B / sqrt(N)

    // one rate constraint per user, summing its streams
    for (int user = 0; user < instance.partition.num_users; ++user) {
        const std::vector<int> streams = instance.order.positions_of(user);
        LogRateConstraint lr;
        lr.t_index = layout.t_index();
        for (int g : streams) lr.rho_indices.push_back(layout.rho_index(g));
        if (scale > 0.0) {
            lr.penalty_coef.assign(static_cast<size_t>(prog.num_vars), 0.0);
            for (int g : streams) {
                const AffineForm& phi = state.phi[static_cast<size_t>(g)];
                lr.penalty_coef[static_cast<size_t>(layout.rho_index(g))] = scale * phi.slope;
                lr.penalty_const += scale * phi.intercept;
            }
        }
        prog.log_rate_constraints.push_back(std::move(lr));
        ++layout.num_rate_constraints;
    }

    for (int g = 0; g < s; ++g) {
        prog.affine_inequalities.push_back(linearize_sinr_constraint(g, state, instance, mode));
        ++layout.num_sinr_constraints;
    }

    for (int user = 0; user < instance.partition.num_users; ++user) {
        AffineInequality budget;
        budget.coef.assign(static_cast<size_t>(prog.num_vars), 0.0);
        for (int g : instance.order.positions_of(user))
            budget.coef[static_cast<size_t>(layout.power_index(g))] = 1.0;
        budget.constant = -instance.budget;
        prog.affine_inequalities.push_back(std::move(budget));
        ++layout.num_budget_constraints;
    }

    prog.lower_bounds.assign(static_cast<size_t>(prog.num_vars), 0.0);
    for (int g = 0; g < s; ++g) prog.lower_bounds[static_cast<size_t>(layout.rho_index(g))] = 1e-9;
    prog.lower_bounds[static_cast<size_t>(layout.t_index())] = -kInf;

    prog.validate();
    return layout;
}

namespace {

// One SCA run from a given start; shared by every initialization strategy.
MmfSolution sca_run(const MmfInstance& instance, const SolverConfig& config, SinrMode mode,
                    std::vector<double> p, std::vector<double> rho) {
    const int s = instance.num_streams();
    const double sub_tol = config.effective_subproblem_tol();

    MmfSolution sol;
    sol.powers.budget = instance.budget;
    double t_prev = 0.0;  // Algorithm start value
    std::vector<double> p_best = p;
    double t_true_best = true_user_rates(instance, p, mode).min_rate;

    int iter = 0;
    while (iter < config.max_sca_iters) {
        ++iter;
        LinearizationState state = make_linearization(iter, p, rho);
        SubproblemLayout layout = assemble_subproblem(state, instance, mode);
        std::vector<double> warm = warm_start_near(layout, state, instance, config.rho_floor);
        KernelResult kr = solve_max_t(layout.program, sub_tol, &warm);

        if (kr.status == KernelStatus::infeasible) {
            if (iter == 1)
                throw std::runtime_error(
                    "sca_solve: subproblem infeasible at initialization "
                    "(rho floor unreachable; check for zero channel gains)");
            // The linearized SINR constraint is a Taylor expansion, not a
            // global restriction, so a carried-forward expansion point can
            // leave the new feasible set. Restore feasibility by re-anchoring
            // rho at the true SINRs of the current powers and retry once.
            rho = compute_sinr(instance.order, {p, instance.budget}, instance.channel, mode);
            for (double& r : rho) r = std::max(r, config.rho_floor);
            state = make_linearization(iter, p, rho);
            layout = assemble_subproblem(state, instance, mode);
            warm = warm_start_near(layout, state, instance, config.rho_floor);
            kr = solve_max_t(layout.program, sub_tol, &warm);
            if (kr.status == KernelStatus::infeasible) break;  // keep the best iterate
        }

        const double t_raw = kr.objective;
        std::vector<double> p_star(kr.x.begin(), kr.x.begin() + s);
        std::vector<double> rho_star(kr.x.begin() + s, kr.x.begin() + 2 * s);
        for (double& r : rho_star) r = std::max(r, config.rho_floor);

        const double t_true = true_user_rates(instance, p_star, mode).min_rate;
        if (t_true > t_true_best) {
            t_true_best = t_true;
            p_best = p_star;
        }
        sol.t_trace.push_back(sol.t_trace.empty() ? t_raw
                                                  : std::max(sol.t_trace.back(), t_raw));

        const bool done = std::abs(t_raw - t_prev) <= config.tol_tau;
        t_prev = t_raw;
        p = std::move(p_star);
        rho = std::move(rho_star);
        if (done) {
            sol.converged = true;
            break;
        }
    }

    sol.iterations = iter;
    sol.powers.powers = std::move(p_best);
    UserRates ur = true_user_rates(instance, sol.powers.powers, mode);
    sol.user_rates = ur.per_user;
    sol.t_star = ur.min_rate;
    CertificateReport cert = certify_solution(sol, instance, mode);
    sol.certificate = cert.max_violation();
    return sol;
}

}  // namespace

MmfSolution sca_solve_mode(const MmfInstance& instance, const SolverConfig& config,
                           SinrMode mode) {
    instance.validate();
    if (!(config.tol_tau > 0.0)) throw std::invalid_argument("sca_solve: tol_tau must be > 0");

    static const double kStartFractions[] = {0.5, 0.9, 0.1, 0.99, 0.25, 0.75, 0.05, 0.95};
    const bool has_split = !instance.partition.splitting.empty();
    const int starts = has_split ? std::max(1, config.multi_start) : 1;

    MmfSolution best;
    bool have_best = false;
    auto consider = [&](MmfSolution sol) {
        if (!have_best || sol.t_star > best.t_star) {
            best = std::move(sol);
            have_best = true;
        }
    };

    for (int start = 0; start < starts; ++start) {
        const double fraction = kStartFractions[static_cast<size_t>(start) % 8];
        auto [p, rho] = initialize(instance, fraction, mode, config.rho_floor);
        consider(sca_run(instance, config, mode, std::move(p), std::move(rho)));
    }

    // The no-splitting allocation is always feasible for a splitting instance
    // (Remark-1 reduction), so a start anchored at the solved no-splitting
    // problem keeps the splitting solution from landing below it.
    if (has_split && mode == SinrMode::sic) {
        MmfInstance reduced =
            make_instance(instance.channel, 0, instance.fbl, instance.budget);
        auto [p0, rho0] = initialize(reduced, 0.5, mode, config.rho_floor);
        const MmfSolution base =
            sca_run(reduced, config, mode, std::move(p0), std::move(rho0));

        std::vector<double> per_user(static_cast<size_t>(instance.partition.num_users), 0.0);
        for (int g = 0; g < reduced.num_streams(); ++g)
            per_user[static_cast<size_t>(reduced.order.order[static_cast<size_t>(g)].user)] =
                base.powers.powers[static_cast<size_t>(g)];

        const int s = instance.num_streams();
        std::vector<double> p(static_cast<size_t>(s));
        for (int g = 0; g < s; ++g) {
            const StreamId& id = instance.order.order[static_cast<size_t>(g)];
            const double pu = per_user[static_cast<size_t>(id.user)];
            switch (id.part) {
                case StreamPart::whole: p[static_cast<size_t>(g)] = pu; break;
                case StreamPart::split1: p[static_cast<size_t>(g)] = pu * (1.0 - 1e-6); break;
                case StreamPart::split2: p[static_cast<size_t>(g)] = pu * 1e-6; break;
            }
        }
        PowerAllocation alloc{p, instance.budget};
        std::vector<double> rho = compute_sinr(instance.order, alloc, instance.channel, mode);
        for (double& r : rho) r = std::max(r, config.rho_floor);
        consider(sca_run(instance, config, mode, std::move(p), std::move(rho)));
    }
    return best;
}

MmfSolution sca_solve(const MmfInstance& instance, const SolverConfig& config) {
    return sca_solve_mode(instance, config, SinrMode::sic);
}

CertificateReport certify_solution(const MmfSolution& sol, const MmfInstance& instance,
                                   SinrMode mode) {
    CertificateReport rep;
    UserRates ur = true_user_rates(instance, sol.powers.powers, mode);
    rep.user_rates = ur.per_user;
    rep.rate_slack = std::max(0.0, sol.t_star - ur.min_rate);
    PowerAllocation alloc{sol.powers.powers, instance.budget};
    rep.budget_violation = budget_violation(alloc, instance.order);
    return rep;
}

}  // namespace mmf
