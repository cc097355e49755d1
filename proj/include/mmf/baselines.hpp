#pragma once

#include "mmf/sca.hpp"

#include <string>

// NOMA and TIN max-min baselines, both driven by the same SCA machinery so
// certification and tolerances are uniform across schemes.

namespace mmf {

enum class SchemeTag { rsma, noma, tin };

struct SchemeKind {
    SchemeTag tag = SchemeTag::rsma;
    int split_count = 0;  // rsma only; 0 for noma/tin

    void validate() const;
    std::string label() const;  // "rsma", "noma", "tin"
};

SchemeTag parse_scheme(const std::string& name);  // throws on unknown name

/// NOMA: no user splits, descending-gain SIC order. Definitionally identical
/// to sca_solve on the J = empty instance.
MmfSolution noma_solve(const ChannelState& channel, const FblParams& fbl, double budget,
                       const SolverConfig& config = {});

/// TIN: no SIC; every user is decoded against the full interference of all
/// others. Power allocation is optimized with the same SCA pipeline unless
/// config.tin_full_power is set.
MmfSolution tin_solve(const ChannelState& channel, const FblParams& fbl, double budget,
                      const SolverConfig& config = {});

}  // namespace mmf
