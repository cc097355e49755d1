#include "mmf/convex_kernel.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace mmf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLn2 = std::numbers::ln2;

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Slack functions s_i(x) > 0 for the three constraint families, in the
// header's ordering. Phase 1 extends x with one relaxation variable that
// enters affine and log-rate slacks with weight +1.
struct BarrierEval {
    const ConvexProgram* prog;
    bool relaxed = false;  // trailing variable is the phase-1 slack

    int dim() const { return prog->num_vars + (relaxed ? 1 : 0); }

    // All slacks; returns false if any is not strictly positive.
    bool slacks(const VectorXd& x, VectorXd& s) const {
        const int n = prog->num_vars;
        const double relax = relaxed ? x[n] : 0.0;
        int idx = 0;
        s.resize(prog->num_constraints() + (relaxed ? 1 : 0));
        for (const auto& ai : *&prog->affine_inequalities) {
            double v = ai.constant;
            for (int j = 0; j < n; ++j) v += ai.coef[static_cast<size_t>(j)] * x[j];
            s[idx++] = -v + relax;
        }
        for (const auto& lr : prog->log_rate_constraints) {
            double f = -lr.penalty_const - x[lr.t_index];
            for (int j : lr.rho_indices) f += std::log1p(x[j]) / kLn2;
            if (!lr.penalty_coef.empty())
                for (int j = 0; j < n; ++j) f -= lr.penalty_coef[static_cast<size_t>(j)] * x[j];
            s[idx++] = f + relax;
        }
        for (int j = 0; j < n; ++j) {
            if (std::isfinite(prog->lower_bounds[static_cast<size_t>(j)]))
                s[idx++] = x[j] - prog->lower_bounds[static_cast<size_t>(j)];
        }
        if (relaxed) s[idx++] = x[n] + 1.0;  // keeps phase 1 bounded below
        for (int i = 0; i < s.size(); ++i) {
            // log-rate slack needs the log arguments in-domain as well
            if (!(s[i] > 0.0) || !std::isfinite(s[i])) return false;
        }
        for (const auto& lr : prog->log_rate_constraints)
            for (int j : lr.rho_indices)
                if (!(x[j] > -1.0)) return false;
        return true;
    }

    double barrier(const VectorXd& s) const {
        double phi = 0.0;
        for (int i = 0; i < s.size(); ++i) phi -= std::log(s[i]);
        return phi;
    }

    // grad/hess of phi accumulated in-place (caller zeroes them).
    void add_grad_hess(const VectorXd& x, const VectorXd& s, VectorXd& grad,
                       MatrixXd& hess) const {
        const int n = prog->num_vars;
        int idx = 0;
        VectorXd gs(dim());
        for (const auto& ai : prog->affine_inequalities) {
            const double si = s[idx++];
            gs.setZero();
            for (int j = 0; j < n; ++j) gs[j] = -ai.coef[static_cast<size_t>(j)];
            if (relaxed) gs[n] = 1.0;
            grad -= gs / si;
            hess += (gs * gs.transpose()) / (si * si);
        }
        for (const auto& lr : prog->log_rate_constraints) {
            const double si = s[idx++];
            gs.setZero();
            for (int j : lr.rho_indices) gs[j] += 1.0 / ((1.0 + x[j]) * kLn2);
            if (!lr.penalty_coef.empty())
                for (int j = 0; j < n; ++j) gs[j] -= lr.penalty_coef[static_cast<size_t>(j)];
            gs[lr.t_index] -= 1.0;
            if (relaxed) gs[n] = 1.0;
            grad -= gs / si;
            hess += (gs * gs.transpose()) / (si * si);
            // -hess(f)/s term: f has diagonal curvature on the log arguments
            for (int j : lr.rho_indices) {
                const double a = 1.0 + x[j];
                hess(j, j) += 1.0 / (a * a * kLn2 * si);
            }
        }
        for (int j = 0; j < n; ++j) {
            if (!std::isfinite(prog->lower_bounds[static_cast<size_t>(j)])) continue;
            const double si = s[idx++];
            grad[j] -= 1.0 / si;
            hess(j, j) += 1.0 / (si * si);
        }
        if (relaxed) {
            const double si = s[idx++];
            grad[n] -= 1.0 / si;
            hess(n, n) += 1.0 / (si * si);
        }
    }
};

struct CenterResult {
    bool converged = false;
    double grad_inf = 0.0;  // inf-norm of c + grad(phi) at exit
    int steps = 0;
};

// Damped Newton on psi(x) = c.x + phi(x), x strictly feasible on entry.
// Stops on the gradient target or once the decrement falls below
// dec_threshold (the last barrier stage uses a tiny threshold so the
// stationarity keeps improving down to the requested KKT residual).
CenterResult center(const BarrierEval& be, const VectorXd& c, VectorXd& x,
                    double grad_target, double dec_threshold, int max_steps) {
    const int n = be.dim();
    VectorXd s, grad(n), delta(n);
    MatrixXd hess(n, n);
    CenterResult res;

    for (int it = 0; it < max_steps; ++it) {
        if (!be.slacks(x, s)) return res;  // should not happen
        grad = c;
        hess.setZero();
        be.add_grad_hess(x, s, grad, hess);
        res.grad_inf = grad.lpNorm<Eigen::Infinity>();

        double reg = 1e-13 * std::max(1.0, hess.trace() / n);
        Eigen::LLT<MatrixXd> llt;
        for (int attempt = 0; attempt < 14; ++attempt) {
            MatrixXd h = hess + reg * MatrixXd::Identity(n, n);
            llt.compute(h);
            if (llt.info() == Eigen::Success) break;
            reg *= 100.0;
        }
        if (llt.info() != Eigen::Success) return res;
        delta = llt.solve(-grad);

        const double decrement2 = -grad.dot(delta);  // lambda^2
        ++res.steps;
        if (decrement2 * 0.5 <= dec_threshold || res.grad_inf <= grad_target) {
            res.converged = true;
            return res;
        }

        // backtrack into the domain, then Armijo
        const double psi0 = c.dot(x) + be.barrier(s);
        double step = 1.0;
        VectorXd xn = x + step * delta;
        VectorXd sn;
        int guard = 0;
        while (!be.slacks(xn, sn) && guard++ < 90) {
            step *= 0.5;
            xn = x + step * delta;
        }
        if (guard >= 90) return res;
        guard = 0;
        while (c.dot(xn) + be.barrier(sn) > psi0 - 0.25 * step * decrement2 && guard++ < 70) {
            step *= 0.5;
            xn = x + step * delta;
            if (!be.slacks(xn, sn)) return res;
        }
        if (guard >= 70) {
            // no usable progress; treat current point as centered enough
            res.converged = decrement2 * 0.5 <= 1e-8;
            return res;
        }
        x = xn;
    }
    return res;
}

VectorXd to_eigen(const std::vector<double>& v) {
    return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> from_eigen(const VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

// Multiplier estimates 1/(mu * s_i) for the original program's constraints.
std::vector<double> barrier_multipliers(const ConvexProgram& prog, const VectorXd& x,
                                        double mu) {
    BarrierEval be{&prog, false};
    VectorXd s;
    be.slacks(x, s);
    std::vector<double> lam(static_cast<size_t>(prog.num_constraints()));
    for (int i = 0; i < prog.num_constraints(); ++i)
        lam[static_cast<size_t>(i)] = 1.0 / (mu * s[i]);
    return lam;
}

// Constraint gradients in the multiplier ordering (affine, log-rate, bounds).
std::vector<VectorXd> constraint_gradients(const ConvexProgram& prog, const VectorXd& x) {
    const int n = prog.num_vars;
    std::vector<VectorXd> grads;
    grads.reserve(static_cast<size_t>(prog.num_constraints()));
    for (const auto& ai : prog.affine_inequalities) {
        VectorXd g(n);
        for (int j = 0; j < n; ++j) g[j] = ai.coef[static_cast<size_t>(j)];
        grads.push_back(std::move(g));
    }
    for (const auto& lr : prog.log_rate_constraints) {
        VectorXd g = VectorXd::Zero(n);  // gradient of -f
        for (int j : lr.rho_indices) g[j] -= 1.0 / ((1.0 + x[j]) * kLn2);
        if (!lr.penalty_coef.empty())
            for (int j = 0; j < n; ++j) g[j] += lr.penalty_coef[static_cast<size_t>(j)];
        g[lr.t_index] += 1.0;
        grads.push_back(std::move(g));
    }
    for (int j = 0; j < n; ++j) {
        if (!std::isfinite(prog.lower_bounds[static_cast<size_t>(j)])) continue;
        VectorXd g = VectorXd::Zero(n);
        g[j] = -1.0;
        grads.push_back(std::move(g));
    }
    return grads;
}

// Barrier multipliers carry the relative noise of the active slacks (the
// binding slack is ~1/mu and is computed by cancellation). A least-squares
// fit of the stationarity system over the near-active set removes that
// noise; the caller keeps whichever estimate certifies better.
std::vector<double> refined_multipliers(const ConvexProgram& prog, const VectorXd& x,
                                        double mu, const std::vector<double>& barrier_lam);

// Best available certificate at (x, mu): barrier multipliers or their
// least-squares refinement, whichever verifies smaller.
std::pair<std::vector<double>, double> best_certificate(const ConvexProgram& prog,
                                                        const VectorXd& x, double mu) {
    std::vector<double> lam = barrier_multipliers(prog, x, mu);
    const std::vector<double> xs(x.data(), x.data() + x.size());
    double res = kkt_residual(prog, xs, lam);
    std::vector<double> refined = refined_multipliers(prog, x, mu, lam);
    const double refined_res = kkt_residual(prog, xs, refined);
    if (refined_res < res) {
        lam = std::move(refined);
        res = refined_res;
    }
    return {std::move(lam), res};
}

std::vector<double> refined_multipliers(const ConvexProgram& prog, const VectorXd& x,
                                        double mu, const std::vector<double>& barrier_lam) {
    const int n = prog.num_vars;
    const int m = prog.num_constraints();
    std::vector<int> active;
    double lam_max = 0.0;
    for (double l : barrier_lam) lam_max = std::max(lam_max, l);
    for (int i = 0; i < m; ++i)
        if (barrier_lam[static_cast<size_t>(i)] >= std::max(1e4 / mu, 1e-7 * lam_max))
            active.push_back(i);
    if (active.empty() || static_cast<int>(active.size()) > n) return barrier_lam;

    const std::vector<VectorXd> grads = constraint_gradients(prog, x);
    MatrixXd a(n, static_cast<int>(active.size()));
    for (size_t k = 0; k < active.size(); ++k)
        a.col(static_cast<int>(k)) = grads[static_cast<size_t>(active[k])];
    VectorXd rhs = VectorXd::Zero(n);
    rhs[prog.objective_index] = 1.0;  // -grad f0
    VectorXd lam_act = a.colPivHouseholderQr().solve(rhs);

    std::vector<double> lam = barrier_lam;
    for (size_t k = 0; k < active.size(); ++k)
        lam[static_cast<size_t>(active[k])] = std::max(0.0, lam_act[static_cast<int>(k)]);
    return lam;
}

}  // namespace

int ConvexProgram::num_finite_bounds() const {
    int n = 0;
    for (double lb : lower_bounds)
        if (std::isfinite(lb)) ++n;
    return n;
}

int ConvexProgram::num_constraints() const {
    return static_cast<int>(affine_inequalities.size() + log_rate_constraints.size()) +
           num_finite_bounds();
}

void ConvexProgram::validate() const {
    if (num_vars < 1) throw std::invalid_argument("ConvexProgram: num_vars < 1");
    if (objective_index < 0 || objective_index >= num_vars)
        throw std::invalid_argument("ConvexProgram: objective_index out of range");
    if (lower_bounds.size() != static_cast<size_t>(num_vars))
        throw std::invalid_argument("ConvexProgram: lower_bounds size mismatch");
    for (const auto& ai : affine_inequalities)
        if (ai.coef.size() != static_cast<size_t>(num_vars))
            throw std::invalid_argument("ConvexProgram: affine coef size mismatch");
    for (const auto& lr : log_rate_constraints) {
        if (lr.t_index != objective_index)
            throw std::invalid_argument("ConvexProgram: log-rate constraint missing objective var");
        if (!lr.penalty_coef.empty() && lr.penalty_coef.size() != static_cast<size_t>(num_vars))
            throw std::invalid_argument("ConvexProgram: penalty coef size mismatch");
        for (int j : lr.rho_indices) {
            if (j < 0 || j >= num_vars)
                throw std::invalid_argument("ConvexProgram: rho index out of range");
            if (!(lower_bounds[static_cast<size_t>(j)] > -1.0))
                throw std::invalid_argument("ConvexProgram: log argument needs lower bound > -1");
        }
    }
}

Phase1Result phase1_point(const ConvexProgram& program) {
    program.validate();
    const int n = program.num_vars;
    BarrierEval be{&program, true};

    // Start strictly inside the bounds with the objective variable pushed low
    // enough that every log-rate slack is comfortably positive.
    VectorXd y(n + 1);
    for (int j = 0; j < n; ++j) {
        const double lb = program.lower_bounds[static_cast<size_t>(j)];
        y[j] = std::isfinite(lb) ? lb + 1.0 : 0.0;
    }
    if (!program.log_rate_constraints.empty()) {
        double tmin = kInf;
        for (const auto& lr : program.log_rate_constraints) {
            double f = -lr.penalty_const;
            for (int j : lr.rho_indices) f += std::log1p(y[j]) / kLn2;
            if (!lr.penalty_coef.empty())
                for (int j = 0; j < n; ++j) f -= lr.penalty_coef[static_cast<size_t>(j)] * y[j];
            tmin = std::min(tmin, f);
        }
        y[program.objective_index] = tmin - 10.0;
    }

    // Relaxation variable above the worst violation.
    y[n] = 0.0;
    {
        VectorXd s;
        be.slacks(y, s);  // may report non-positive entries; find the worst
        double worst = 0.0;
        int idx = 0;
        for (size_t i = 0; i < program.affine_inequalities.size(); ++i, ++idx)
            worst = std::max(worst, -s[idx]);
        for (size_t i = 0; i < program.log_rate_constraints.size(); ++i, ++idx)
            worst = std::max(worst, -s[idx]);
        y[n] = worst + 1.0;
    }

    VectorXd c = VectorXd::Zero(n + 1);
    c[n] = 1.0;  // minimize the relaxation

    Phase1Result out;
    const int m = program.num_constraints() + 1;
    double mu = 10.0;
    for (int stage = 0; stage < 24; ++stage) {
        CenterResult cr = center(be, mu * c, y, 1e-9 * mu, 1e-14, 200);
        out.max_violation = y[n];
        if (y[n] <= -2e-8) {
            // confirm the contract: every original slack >= 1e-8
            BarrierEval orig{&program, false};
            VectorXd xs = y.head(n), s;
            if (orig.slacks(xs, s) && s.minCoeff() >= 1e-8) {
                out.feasible = true;
                out.x = from_eigen(xs);
                return out;
            }
        }
        const double gap = m / mu;
        if (y[n] > 0.0 && gap < 0.5 * y[n]) {
            out.feasible = false;  // violation certifiably positive
            return out;
        }
        if (gap < 1e-10 && cr.converged) break;
        mu *= 10.0;
    }
    out.feasible = false;
    return out;
}

KernelResult solve_max_t(const ConvexProgram& program, double tol,
                         const std::vector<double>* warm_start) {
    program.validate();
    if (!(tol > 0.0)) throw std::invalid_argument("solve_max_t: tol must be > 0");
    const int n = program.num_vars;
    KernelResult res;

    BarrierEval be{&program, false};
    VectorXd x;
    bool have_start = false;
    if (warm_start && warm_start->size() == static_cast<size_t>(n)) {
        VectorXd cand = to_eigen(*warm_start), s;
        if (be.slacks(cand, s) && s.minCoeff() > 1e-10) {
            x = cand;
            have_start = true;
        }
    }
    if (!have_start) {
        Phase1Result p1 = phase1_point(program);
        if (!p1.feasible) {
            res.status = KernelStatus::infeasible;
            return res;
        }
        x = to_eigen(p1.x);
    }

    VectorXd c = VectorXd::Zero(n);
    c[program.objective_index] = -1.0;  // maximize t == minimize -t

    const int m = program.num_constraints();
    double mu = 10.0;
    for (int stage = 0; stage < 40; ++stage) {
        const bool final_stage = (m / mu <= tol);
        const double grad_target = final_stage ? 0.25 * tol * mu : 1e-7 * mu;
        const double dec_threshold = final_stage ? 1e-24 : 1e-14;
        CenterResult cr = center(be, mu * c, x, grad_target, dec_threshold, 250);
        res.newton_steps += cr.steps;
        res.path_residuals.push_back(best_certificate(program, x, mu).second);
        if (final_stage) break;
        mu *= 10.0;
    }

    res.x = from_eigen(x);
    res.objective = x[program.objective_index];
    res.duality_gap = m / mu;
    auto [lam, residual] = best_certificate(program, x, mu);
    res.multipliers = std::move(lam);
    res.kkt_residual = residual;
    // the measured certificate is the optimality criterion
    res.status = res.kkt_residual <= tol ? KernelStatus::optimal : KernelStatus::max_iter;
    return res;
}

double kkt_residual(const ConvexProgram& program, const std::vector<double>& x,
                    const std::vector<double>& multipliers) {
    program.validate();
    const int n = program.num_vars;
    if (x.size() != static_cast<size_t>(n))
        throw std::invalid_argument("kkt_residual: x size mismatch");
    if (multipliers.size() != static_cast<size_t>(program.num_constraints()))
        throw std::invalid_argument("kkt_residual: multiplier count mismatch");

    // g_i(x) <= 0 with gradients; f0(x) = -x[objective]
    VectorXd stat = VectorXd::Zero(n);
    stat[program.objective_index] = -1.0;
    double comp = 0.0, primal = 0.0;
    int idx = 0;

    for (const auto& ai : program.affine_inequalities) {
        double g = ai.constant;
        for (int j = 0; j < n; ++j) g += ai.coef[static_cast<size_t>(j)] * x[static_cast<size_t>(j)];
        const double lam = multipliers[static_cast<size_t>(idx++)];
        for (int j = 0; j < n; ++j) stat[j] += lam * ai.coef[static_cast<size_t>(j)];
        comp = std::max(comp, std::abs(lam * g));
        primal = std::max(primal, g);
    }
    for (const auto& lr : program.log_rate_constraints) {
        double f = -lr.penalty_const - x[static_cast<size_t>(lr.t_index)];
        for (int j : lr.rho_indices) f += std::log1p(x[static_cast<size_t>(j)]) / kLn2;
        if (!lr.penalty_coef.empty())
            for (int j = 0; j < n; ++j) f -= lr.penalty_coef[static_cast<size_t>(j)] * x[static_cast<size_t>(j)];
        const double lam = multipliers[static_cast<size_t>(idx++)];
        // g = -f, grad g = -grad f
        for (int j : lr.rho_indices) stat[j] -= lam / ((1.0 + x[static_cast<size_t>(j)]) * kLn2);
        if (!lr.penalty_coef.empty())
            for (int j = 0; j < n; ++j) stat[j] += lam * lr.penalty_coef[static_cast<size_t>(j)];
        stat[lr.t_index] += lam;
        comp = std::max(comp, std::abs(lam * f));
        primal = std::max(primal, -f);
    }
    for (int j = 0; j < n; ++j) {
        const double lb = program.lower_bounds[static_cast<size_t>(j)];
        if (!std::isfinite(lb)) continue;
        const double g = lb - x[static_cast<size_t>(j)];
        const double lam = multipliers[static_cast<size_t>(idx++)];
        stat[j] -= lam;
        comp = std::max(comp, std::abs(lam * g));
        primal = std::max(primal, g);
    }
    return std::max({stat.lpNorm<Eigen::Infinity>(), comp, primal});
}

}  // namespace mmf
