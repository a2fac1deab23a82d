#pragma once

// Treatment-effect estimates over evaluation records, per node type and metric.

#include "syntaxeval/causal_core.hpp"
#include "syntaxeval/features.hpp"
#include "syntaxeval/metrics.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace syntaxeval::causal {

enum class Metric { Jaccard, Levenshtein, SorensenDice };

inline constexpr std::array<Metric, 3> kMetrics = {Metric::Jaccard, Metric::Levenshtein, Metric::SorensenDice};

[[nodiscard]] std::string_view metric_name(Metric m);
[[nodiscard]] Metric metric_from_name(std::string_view name);
[[nodiscard]] double outcome(const metrics::SimilarityScores& s, Metric m);

struct EvaluationRecord {
    std::string snippet_id;
    std::string node_type;
    int treatment = 0;                  // 1: node-type masking, 0: random masking
    metrics::SimilarityScores outcomes;  // for controls, the mean over the variants
    features::ConfounderVector confounders;
    std::size_t mask_count = 0;
    std::size_t variants = 0;  // samples averaged into the outcome

    friend bool operator==(const EvaluationRecord&, const EvaluationRecord&) = default;
};

[[nodiscard]] nlohmann::ordered_json to_json(const EvaluationRecord& r);
[[nodiscard]] EvaluationRecord record_from_json(const nlohmann::ordered_json& j);

// Canonical order (snippet id, treatment) so estimates do not depend on input order.
[[nodiscard]] Design<double> make_design(std::vector<EvaluationRecord> records);

[[nodiscard]] PropensityModel<double> fit_propensity(const std::vector<EvaluationRecord>& records,
                                                     const FitOptions& options = {});

[[nodiscard]] AteEstimate<double> estimate_ate_ipw(const std::vector<EvaluationRecord>& records,
                                                   const PropensityModel<double>& model, Metric metric);

[[nodiscard]] BootstrapResult<double> bootstrap_ate(const std::vector<EvaluationRecord>& records, bool refit,
                                                    Metric metric, std::size_t resamples, std::uint64_t seed);

[[nodiscard]] double placebo_refute(const std::vector<EvaluationRecord>& records, Metric metric, std::uint64_t seed);

struct GroupStats {
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation
};

struct CausalResult {
    std::string node_type;
    Metric metric = Metric::Jaccard;
    double tau = 0.0;
    double tau_naive = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double tau_boot_mean = 0.0;
    double tau_boot_std = 0.0;
    double placebo_tau = 0.0;
    std::size_t n_treated = 0;
    std::size_t n_control = 0;
    GroupStats treated;
    GroupStats control;
    bool propensity_converged = true;
    std::vector<std::string> flags;  // "underpowered", "refuted", "not_converged"
};

struct AnalysisOptions {
    std::size_t bootstrap_resamples = 500;
    bool refit = true;
    std::uint64_t seed = 0;
    std::size_t min_group_size = 30;
    double placebo_floor = 0.02;     // |placebo| allowed up to max(floor, ratio * |tau|)
    double placebo_ratio = 0.1;
    std::vector<std::string> node_types;  // if set, types without records get a notice
    FitOptions fit;
};

struct Analysis {
    std::vector<CausalResult> results;  // sorted by node type, then metric
    std::vector<std::string> notices;
};

[[nodiscard]] Analysis run_causal_analysis(const std::vector<EvaluationRecord>& records,
                                           const AnalysisOptions& options = {});

[[nodiscard]] std::string results_csv(const std::vector<CausalResult>& results);
[[nodiscard]] nlohmann::ordered_json results_json(const std::vector<CausalResult>& results);
[[nodiscard]] std::vector<CausalResult> results_from_json(const nlohmann::ordered_json& j);

}  // namespace syntaxeval::causal
