#include "mmf/baselines.hpp"

#include <algorithm>
#include <stdexcept>

namespace mmf {

void SchemeKind::validate() const {
    if (tag != SchemeTag::rsma && split_count != 0)
        throw std::invalid_argument("SchemeKind: only rsma schemes may split users");
    if (split_count < 0) throw std::invalid_argument("SchemeKind: split_count must be >= 0");
}

std::string SchemeKind::label() const {
    switch (tag) {
        case SchemeTag::rsma: return "rsma";
        case SchemeTag::noma: return "noma";
        case SchemeTag::tin: return "tin";
    }
    return "?";
}

SchemeTag parse_scheme(const std::string& name) {
    if (name == "rsma") return SchemeTag::rsma;
    if (name == "noma") return SchemeTag::noma;
    if (name == "tin") return SchemeTag::tin;
    throw std::invalid_argument("unknown scheme: " + name);
}

MmfSolution noma_solve(const ChannelState& channel, const FblParams& fbl, double budget,
                       const SolverConfig& config) {
    return sca_solve(make_instance(channel, 0, fbl, budget), config);
}

MmfSolution tin_solve(const ChannelState& channel, const FblParams& fbl, double budget,
                      const SolverConfig& config) {
    MmfInstance inst = make_instance(channel, 0, fbl, budget);
    if (config.tin_full_power) {
        MmfSolution sol;
        sol.powers.budget = budget;
        sol.powers.powers.assign(static_cast<size_t>(inst.num_streams()), budget);
        CertificateReport cert = certify_solution(sol, inst, SinrMode::tin);
        sol.user_rates = cert.user_rates;
        sol.t_star = *std::min_element(sol.user_rates.begin(), sol.user_rates.end());
        sol.converged = true;
        sol.iterations = 0;
        sol.certificate = certify_solution(sol, inst, SinrMode::tin).max_violation();
        return sol;
    }
    return sca_solve_mode(inst, config, SinrMode::tin);
}

}  // namespace mmf
