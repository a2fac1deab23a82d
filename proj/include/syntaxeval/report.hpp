#pragma once

#include "syntaxeval/causal.hpp"

#include <string>
#include <vector>

namespace syntaxeval {

struct ArmSummary {
    std::size_t n = 0;
    double mean = 0.0;
    double std = 0.0;
};

// Pools per-node-type arm statistics (mean, sample std, n) into one.
[[nodiscard]] ArmSummary pool(const std::vector<ArmSummary>& groups);

// Treatment summary (avg ± std per arm and metric) above the per-node-type
// effect table.
[[nodiscard]] std::string report_summary(const std::vector<causal::CausalResult>& results);

}  // namespace syntaxeval
