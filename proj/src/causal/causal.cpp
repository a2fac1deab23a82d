#include "syntaxeval/causal.hpp"

#include "syntaxeval/error.hpp"
#include "syntaxeval/json_io.hpp"

#include <fmt/format.h>

#include <map>
#include <set>
#include <unordered_map>

namespace syntaxeval::causal {

std::string_view metric_name(Metric m) {
    switch (m) {
        case Metric::Jaccard: return "jaccard";
        case Metric::Levenshtein: return "levenshtein";
        case Metric::SorensenDice: return "sorensen_dice";
    }
    return "?";
}

Metric metric_from_name(std::string_view name) {
    for (auto m : kMetrics) {
        if (metric_name(m) == name) return m;
    }
    throw FormatError(fmt::format("unknown metric \"{}\"", name));
}

double outcome(const metrics::SimilarityScores& s, Metric m) {
    switch (m) {
        case Metric::Jaccard: return s.jaccard;
        case Metric::Levenshtein: return s.levenshtein;
        case Metric::SorensenDice: return s.sorensen_dice;
    }
    return 0.0;
}

nlohmann::ordered_json to_json(const EvaluationRecord& r) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    j["snippet_id"] = r.snippet_id;
    j["node_type"] = r.node_type;
    j["treatment"] = r.treatment;
    j["outcomes"] = {{"jaccard", r.outcomes.jaccard},
                     {"levenshtein", r.outcomes.levenshtein},
                     {"sorensen_dice", r.outcomes.sorensen_dice}};
    j["confounders"] = syntaxeval::to_json(r.confounders);
    j["mask_count"] = r.mask_count;
    j["variants"] = r.variants;
    return j;
}

EvaluationRecord record_from_json(const nlohmann::ordered_json& j) {
    try {
        EvaluationRecord r;
        r.snippet_id = j.at("snippet_id").get<std::string>();
        r.node_type = j.at("node_type").get<std::string>();
        r.treatment = j.at("treatment").get<int>();
        if (r.treatment != 0 && r.treatment != 1) throw FormatError("treatment must be 0 or 1");
        const auto& o = j.at("outcomes");
        r.outcomes = {o.at("jaccard").get<double>(), o.at("levenshtein").get<double>(), o.at("sorensen_dice").get<double>()};
        for (auto m : kMetrics) {
            const double v = outcome(r.outcomes, m);
            if (!(v >= 0.0 && v <= 1.0)) throw FormatError(fmt::format("outcome {} = {} outside [0, 1]", metric_name(m), v));
        }
        r.confounders = confounders_from_json(j.at("confounders"));
        r.mask_count = j.value("mask_count", std::size_t{0});
        r.variants = j.value("variants", std::size_t{0});
        return r;
    } catch (const nlohmann::ordered_json::exception& e) {
        throw FormatError(fmt::format("record: {}", e.what()));
    }
}

Design<double> make_design(std::vector<EvaluationRecord> records) {
    std::sort(records.begin(), records.end(), [](const EvaluationRecord& a, const EvaluationRecord& b) {
        return std::tie(a.snippet_id, a.treatment, a.node_type) < std::tie(b.snippet_id, b.treatment, b.node_type);
    });
    const auto n = static_cast<Eigen::Index>(records.size());
    Design<double> d;
    d.z.resize(n, features::ConfounderVector::size);
    d.t.resize(n);
    d.y.resize(n, static_cast<Eigen::Index>(kMetrics.size()));
    d.cluster.resize(records.size());
    std::size_t cluster = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = records[static_cast<std::size_t>(i)];
        if (i > 0 && r.snippet_id != records[static_cast<std::size_t>(i - 1)].snippet_id) ++cluster;
        d.cluster[static_cast<std::size_t>(i)] = cluster;
        const auto z = r.confounders.values();
        for (std::size_t c = 0; c < z.size(); ++c) d.z(i, static_cast<Eigen::Index>(c)) = static_cast<double>(z[c]);
        d.t(i) = r.treatment;
        for (std::size_t k = 0; k < kMetrics.size(); ++k) d.y(i, static_cast<Eigen::Index>(k)) = outcome(r.outcomes, kMetrics[k]);
    }
    return d;
}

namespace {

Eigen::Index column(Metric m) { return static_cast<Eigen::Index>(static_cast<int>(m)); }

Design<double> single_outcome(Design<double> d, Metric m) {
    d.y = MatrixX<double>(d.y.col(column(m)));
    return d;
}

}  // namespace

PropensityModel<double> fit_propensity(const std::vector<EvaluationRecord>& records, const FitOptions& options) {
    const auto d = make_design(records);
    return fit_propensity(d.z, d.t, options);
}

AteEstimate<double> estimate_ate_ipw(const std::vector<EvaluationRecord>& records, const PropensityModel<double>& model,
                                     Metric metric) {
    const auto d = make_design(records);
    return estimate_ate_ipw(VectorX<double>(d.y.col(column(metric))), d.t, model.predict(d.z));
}

BootstrapResult<double> bootstrap_ate(const std::vector<EvaluationRecord>& records, bool refit, Metric metric,
                                      std::size_t resamples, std::uint64_t seed) {
    BootstrapOptions o;
    o.refit = refit;
    o.resamples = resamples;
    o.seed = seed;
    return bootstrap_ate(single_outcome(make_design(records), metric), o).front();
}

double placebo_refute(const std::vector<EvaluationRecord>& records, Metric metric, std::uint64_t seed) {
    return placebo_refute(single_outcome(make_design(records), metric), seed)(0);
}

namespace {

GroupStats stats(const std::vector<double>& v) {
    GroupStats g;
    if (v.empty()) return g;
    double s = 0.0;
    for (double x : v) s += x;
    g.mean = s / static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - g.mean) * (x - g.mean);
        g.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return g;
}

}  // namespace

Analysis run_causal_analysis(const std::vector<EvaluationRecord>& records, const AnalysisOptions& options) {
    if (records.empty()) throw Error("run_causal_analysis: no records");
    std::map<std::string, std::vector<EvaluationRecord>> groups;
    for (const auto& r : records) groups[r.node_type].push_back(r);

    Analysis out;
    for (const auto& nt : options.node_types) {
        if (!groups.count(nt)) out.notices.push_back(fmt::format("node type {} has no records; omitted", nt));
    }
    for (const auto& [node_type, group] : groups) {
        const Design<double> d = make_design(group);
        const auto n1 = static_cast<std::size_t>(d.t.sum());
        const auto n0 = group.size() - n1;
        if (n1 == 0 || n0 == 0) {
            out.notices.push_back(fmt::format("node type {} lacks an arm ({} treated, {} control); omitted", node_type, n1, n0));
            continue;
        }
        const std::uint64_t seed = derive_seed(options.seed, {hash_string(node_type)});
        const auto model = fit_propensity(d.z, d.t, options.fit);
        if (!model.converged) {
            out.notices.push_back(fmt::format("node type {}: propensity fit did not converge in {} iterations", node_type,
                                              model.iterations));
        }
        const VectorX<double> p = model.predict(d.z);

        BootstrapOptions bo;
        bo.resamples = options.bootstrap_resamples;
        bo.refit = options.refit;
        bo.seed = derive_seed(seed, {hash_string("bootstrap")});
        bo.fit = options.fit;
        const auto boot = bootstrap_ate(d, bo);
        const VectorX<double> placebo = placebo_refute(d, derive_seed(seed, {hash_string("placebo")}), options.fit);

        for (auto m : kMetrics) {
            const Eigen::Index k = column(m);
            const VectorX<double> y = d.y.col(k);
            const auto est = estimate_ate_ipw(y, d.t, p);
            std::vector<double> y1, y0;
            for (Eigen::Index i = 0; i < y.size(); ++i) (d.t(i) > 0.5 ? y1 : y0).push_back(y(i));

            CausalResult r;
            r.node_type = node_type;
            r.metric = m;
            r.tau = est.tau;
            r.tau_naive = est.tau_naive;
            const auto& b = boot[static_cast<std::size_t>(k)];
            r.ci_low = b.ci_low;
            r.ci_high = b.ci_high;
            r.tau_boot_mean = b.tau_mean;
            r.tau_boot_std = b.tau_std;
            r.placebo_tau = placebo(k);
            r.n_treated = n1;
            r.n_control = n0;
            r.treated = stats(y1);
            r.control = stats(y0);
            r.propensity_converged = model.converged;
            if (std::min(n1, n0) < options.min_group_size) r.flags.emplace_back("underpowered");
            if (std::abs(r.placebo_tau) > std::max(options.placebo_floor, options.placebo_ratio * std::abs(r.tau))) {
                r.flags.emplace_back("refuted");
            }
            if (!model.converged) r.flags.emplace_back("not_converged");
            out.results.push_back(std::move(r));
        }
    }
    return out;
}

namespace {

std::string join_flags(const std::vector<std::string>& flags) {
    std::string s;
    for (const auto& f : flags) {
        if (!s.empty()) s += ';';
        s += f;
    }
    return s;
}

}  // namespace

std::string results_csv(const std::vector<CausalResult>& results) {
    std::string out =
        "node_type,metric,tau,tau_naive,ci_low,ci_high,placebo_tau,n_treated,n_control,mean_t1,std_t1,mean_t0,std_t0,flags\n";
    for (const auto& r : results) {
        out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.node_type, metric_name(r.metric),
                           format_double(r.tau), format_double(r.tau_naive), format_double(r.ci_low),
                           format_double(r.ci_high), format_double(r.placebo_tau), r.n_treated, r.n_control,
                           format_double(r.treated.mean), format_double(r.treated.std), format_double(r.control.mean),
                           format_double(r.control.std), join_flags(r.flags));
    }
    return out;
}

nlohmann::ordered_json results_json(const std::vector<CausalResult>& results) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& r : results) {
        nlohmann::ordered_json j = nlohmann::ordered_json::object();
        j["node_type"] = r.node_type;
        j["metric"] = metric_name(r.metric);
        j["tau"] = r.tau;
        j["tau_naive"] = r.tau_naive;
        j["ci_low"] = r.ci_low;
        j["ci_high"] = r.ci_high;
        j["tau_bootstrap_mean"] = r.tau_boot_mean;
        j["tau_bootstrap_std"] = r.tau_boot_std;
        j["placebo_tau"] = r.placebo_tau;
        j["n_treated"] = r.n_treated;
        j["n_control"] = r.n_control;
        j["group_stats"] = {{"treated", {{"mean", r.treated.mean}, {"std", r.treated.std}}},
                            {"control", {{"mean", r.control.mean}, {"std", r.control.std}}}};
        j["propensity_converged"] = r.propensity_converged;
        j["flags"] = r.flags;
        arr.push_back(std::move(j));
    }
    return nlohmann::ordered_json{{"results", std::move(arr)}};
}

std::vector<CausalResult> results_from_json(const nlohmann::ordered_json& j) {
    std::vector<CausalResult> out;
    try {
        for (const auto& e : j.at("results")) {
            CausalResult r;
            r.node_type = e.at("node_type").get<std::string>();
            r.metric = metric_from_name(e.at("metric").get<std::string>());
            r.tau = e.at("tau").get<double>();
            r.tau_naive = e.at("tau_naive").get<double>();
            r.ci_low = e.at("ci_low").get<double>();
            r.ci_high = e.at("ci_high").get<double>();
            r.tau_boot_mean = e.value("tau_bootstrap_mean", 0.0);
            r.tau_boot_std = e.value("tau_bootstrap_std", 0.0);
            r.placebo_tau = e.at("placebo_tau").get<double>();
            r.n_treated = e.at("n_treated").get<std::size_t>();
            r.n_control = e.at("n_control").get<std::size_t>();
            const auto& g = e.at("group_stats");
            r.treated = {g.at("treated").at("mean").get<double>(), g.at("treated").at("std").get<double>()};
            r.control = {g.at("control").at("mean").get<double>(), g.at("control").at("std").get<double>()};
            r.propensity_converged = e.value("propensity_converged", true);
            r.flags = e.value("flags", std::vector<std::string>{});
            out.push_back(std::move(r));
        }
    } catch (const nlohmann::ordered_json::exception& ex) {
        throw FormatError(fmt::format("causal results: {}", ex.what()));
    }
    return out;
}

}  // namespace syntaxeval::causal
