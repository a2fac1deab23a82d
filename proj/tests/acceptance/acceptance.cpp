// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// Usage: acceptance [name-substring]

#include "syntaxeval/causal.hpp"
#include "syntaxeval/features.hpp"
#include "syntaxeval/json_io.hpp"
#include "syntaxeval/metrics.hpp"
#include "syntaxeval/pipeline.hpp"

#include "support/files.hpp"
#include "support/mock_server.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

using namespace syntaxeval;
using causal::Metric;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

struct Criterion {
    std::string name;
    double time_limit_s;  // 0: none
    std::function<Outcome()> run;
};

Outcome fail(std::string why) { return {false, std::move(why)}; }

PipelineConfig fixture_config(const fs::path& out, const std::string& backend) {
    PipelineConfig c;
    c.corpus_path = testsupport::test_path("data/snippets.jsonl");
    c.backend = backend;
    c.output_dir = out;
    return c;
}

Outcome oracle_end_to_end() {
    testsupport::TempDir dir("acc-oracle");
    const auto c = fixture_config(dir / "out", "oracle");
    const auto s = run_pipeline(c);
    if (s.exit_code != kExitOk) return fail("exit " + std::to_string(s.exit_code) + ": " + s.message);
    const auto m = testsupport::read_json(c.output_dir / "run_manifest.json");
    const std::size_t snippets = m.at("corpus").at("snippets");
    if (snippets < 50) return fail(fmt::format("only {} snippets", snippets));
    // a control record is the mean of its variants, so 1.0 means every variant scored 1.0
    for (const auto& r : read_records(c.output_dir / "records.jsonl")) {
        if (r.outcomes != metrics::SimilarityScores{1.0, 1.0, 1.0})
            return fail(fmt::format("{} {} arm {} scored below 1", r.snippet_id, r.node_type, r.treatment));
    }
    const auto results = causal::results_from_json(json::parse(read_file(c.output_dir / "causal_results.json")));
    double worst = 0.0;
    for (const auto& r : results) worst = std::max(worst, std::abs(r.tau));
    if (results.empty()) return fail("no results");
    if (worst > 0.01) return fail(fmt::format("max |tau| = {:.4f}", worst));
    return {true, fmt::format("{} snippets, {} records, {} results, max |tau| = {:.2g}", snippets, s.records,
                              results.size(), worst)};
}

Outcome corruptor_end_to_end() {
    testsupport::TempDir dir("acc-corrupt");
    const auto c = fixture_config(dir / "out", "corruptor");
    const auto s = run_pipeline(c);
    if (s.exit_code != kExitOk) return fail("exit " + std::to_string(s.exit_code) + ": " + s.message);
    const auto m = testsupport::read_json(c.output_dir / "run_manifest.json");
    const std::size_t snippets = m.at("corpus").at("snippets");
    if (snippets < 200) return fail(fmt::format("only {} snippets", snippets));
    const auto results = causal::results_from_json(json::parse(read_file(c.output_dir / "causal_results.json")));
    if (results.empty()) return fail("no results");
    double largest = -1.0;
    for (const auto& r : results) {
        if (!(r.tau < 0.0))
            return fail(fmt::format("{} {} tau = {:.4f}", r.node_type, causal::metric_name(r.metric), r.tau));
        largest = std::max(largest, r.tau);
    }
    return {true, fmt::format("{} snippets, {} results, largest tau = {:.4f}", snippets, results.size(), largest)};
}

Outcome metric_oracles() {
    const auto seqs = testsupport::all_sequences({"a", "b", "c"}, 6);
    std::size_t pairs = 0;
    for (const auto& a : seqs) {
        for (const auto& b : seqs) {
            if (metrics::edit_distance(a, b) != testsupport::recursive_levenshtein(a, b))
                return fail(fmt::format("edit distance differs on lengths {} and {}", a.size(), b.size()));
            ++pairs;
        }
    }
    Rng rng(1000);
    for (int i = 0; i < 1000; ++i) {
        auto draw = [&] {
            testsupport::Labels v(uniform_index(rng, 25));
            for (auto& s : v) s = "t" + std::to_string(uniform_index(rng, 10));
            return v;
        };
        const auto a = draw(), b = draw();
        if (metrics::jaccard(a, b) != testsupport::oracle_jaccard(a, b)) return fail("jaccard differs");
        if (metrics::sorensen_dice(a, b) != testsupport::oracle_dice(a, b)) return fail("dice differs");
    }
    return {true, fmt::format("{} levenshtein pairs, 1000 jaccard/dice pairs", pairs)};
}

causal::AnalysisOptions synthetic_options(std::uint64_t seed) {
    causal::AnalysisOptions o;
    o.seed = seed;
    return o;
}

Outcome synthetic_recovery() {
    const auto recs = testsupport::independent_design(2000, -0.1, 11);
    const auto a = causal::run_causal_analysis(recs, synthetic_options(12));
    if (a.results.size() != 3) return fail("expected 3 results");
    const auto& r = a.results[0];
    if (std::abs(r.tau + 0.1) > 0.01) return fail(fmt::format("tau = {:.4f}", r.tau));
    if (std::abs(r.placebo_tau) > 0.02) return fail(fmt::format("placebo = {:.4f}", r.placebo_tau));
    return {true, fmt::format("tau = {:.4f}, placebo = {:.4f}, ci = [{:.4f}, {:.4f}]", r.tau, r.placebo_tau,
                              r.ci_low, r.ci_high)};
}

Outcome bootstrap_coverage() {
    const int trials = 200;
    int covered = 0;
    for (int k = 0; k < trials; ++k) {
        const auto recs = testsupport::independent_design(2000, -0.1, derive_seed(77, {static_cast<std::uint64_t>(k)}));
        const auto b = causal::bootstrap_ate(recs, true, Metric::Jaccard, 500, derive_seed(78, {static_cast<std::uint64_t>(k)}));
        covered += b.ci_low <= -0.1 && -0.1 <= b.ci_high;
    }
    const double pct = 100.0 * covered / trials;
    const std::string detail = fmt::format("{}/{} intervals cover ({:.1f}%)", covered, trials, pct);
    if (std::abs(pct - 95.0) > 5.0) return fail(detail);
    return {true, detail};
}

Outcome confounded_design() {
    const double delta = -0.1;
    const auto recs = testsupport::confounded_design(4000, delta, 21);
    const auto a = causal::run_causal_analysis(recs, synthetic_options(22));
    const auto& r = a.results[0];
    const double bias = r.tau_naive - delta;
    const std::string detail =
        fmt::format("naive = {:.4f} (bias {:.4f}), ipw = {:.4f} (error {:.4f})", r.tau_naive, bias, r.tau, r.tau - delta);
    if (std::abs(bias) < 0.05) return fail("naive not biased enough: " + detail);
    if (std::abs(r.tau - delta) > 0.015) return fail(detail);
    return {true, detail};
}

Outcome check_pairing(const corpus::Corpus& corpus, const PipelineConfig& c, std::size_t& groups,
                      std::size_t& controls) {
    const auto masks = mask_corpus(corpus, c);
    for (const auto& g : masks.groups) {
        ++groups;
        if (g.controls.size() != 20)
            return fail(fmt::format("{} {}: {} controls", g.snippet_id, g.node_type, g.controls.size()));
        std::vector<bool> seen(20, false);
        for (const auto& s : g.controls) {
            ++controls;
            if (s.mask_count != g.treatment.mask_count || s.masked_spans.size() != s.mask_count)
                return fail(fmt::format("{} {}: control masks {} vs {}", g.snippet_id, g.node_type, s.mask_count,
                                        g.treatment.mask_count));
            if (s.arm != masking::Arm::Control || !s.variant_index || *s.variant_index >= 20 || seen[*s.variant_index])
                return fail(fmt::format("{} {}: bad variant", g.snippet_id, g.node_type));
            seen[*s.variant_index] = true;
        }
    }
    return {};
}

Outcome mask_pairing() {
    PipelineConfig c = fixture_config("unused", "oracle");
    std::size_t groups = 0, controls = 0;
    auto fixture = prepare_corpus(c);
    if (auto o = check_pairing(fixture, c, groups, controls); !o.pass) return o;

    // a second, unrelated corpus: the parser reference sources
    corpus::Corpus other;
    for (const auto& j : testsupport::read_jsonl(testsupport::test_path("fixtures/parser_reference.jsonl"))) {
        other.snippets.push_back({fmt::format("p{:04d}", other.size()), j.at("source"), "", std::nullopt});
    }
    c.seed = 9;
    if (auto o = check_pairing(other, c, groups, controls); !o.pass) return o;
    if (groups == 0) return fail("no treated samples");
    return {true, fmt::format("{} treated samples, {} controls, all paired", groups, controls)};
}

Outcome logistic_optimality() {
    using causal::MatrixX;
    using causal::VectorX;
    Rng rng(31);
    double worst_grad = 0.0, worst_rel = 0.0;
    for (int k = 0; k < 20; ++k) {
        const Eigen::Index n = 100 + static_cast<Eigen::Index>(uniform_index(rng, 900));
        MatrixX<double> z(n, 7);
        VectorX<double> t(n);
        VectorX<double> w(7);
        for (auto& v : w) v = 0.3 * testsupport::normal(rng);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto vals = testsupport::random_confounders(rng).values();
            for (int c = 0; c < 7; ++c) z(i, c) = static_cast<double>(vals[static_cast<std::size_t>(c)]);
        }
        const VectorX<double> scaled =
            ((z.rowwise() - z.colwise().mean()).array().rowwise() / z.array().colwise().maxCoeff()).matrix() * w;
        for (Eigen::Index i = 0; i < n; ++i) t(i) = uniform01(rng) < 1.0 / (1.0 + std::exp(-scaled(i))) ? 1.0 : 0.0;
        if (t.sum() == 0.0 || t.sum() == static_cast<double>(n)) t(0) = 1.0 - t(0);

        const causal::FitOptions opt;
        const auto m = causal::fit_propensity(z, t, opt);
        if (!m.converged) return fail(fmt::format("dataset {} did not converge", k));
        const MatrixX<double> x = m.design(z);
        const double g = causal::penalized_gradient(x, t, m.coefficients, opt.ridge).cwiseAbs().maxCoeff();
        worst_grad = std::max(worst_grad, g);

        // analytic gradient against central differences away from the optimum
        VectorX<double> beta(x.cols());
        for (auto& v : beta) v = 0.5 * testsupport::normal(rng);
        const VectorX<double> analytic = causal::penalized_gradient(x, t, beta, opt.ridge);
        VectorX<double> numeric(beta.size());
        for (Eigen::Index j = 0; j < beta.size(); ++j) {
            const double h = 1e-5 * std::max(1.0, std::abs(beta(j)));
            VectorX<double> up = beta, down = beta;
            up(j) += h;
            down(j) -= h;
            numeric(j) = (causal::penalized_log_likelihood(x, t, up, opt.ridge) -
                          causal::penalized_log_likelihood(x, t, down, opt.ridge)) /
                         (2 * h);
        }
        const double rel = (numeric - analytic).cwiseAbs().maxCoeff() / std::max(1.0, analytic.cwiseAbs().maxCoeff());
        worst_rel = std::max(worst_rel, rel);
    }
    const std::string detail = fmt::format("max |grad| = {:.2e}, max relative fd error = {:.2e}", worst_grad, worst_rel);
    if (worst_grad > 1e-6 || worst_rel > 1e-4) return fail(detail);
    return {true, detail};
}

Outcome confounder_fixture() {
    const auto rows = testsupport::read_json(testsupport::test_path("fixtures/confounders.json"));
    for (const auto& row : rows) {
        const std::string src = row.at("source");
        const auto z = features::extract_confounders(src);
        const auto expect = [&](const char* key, std::int64_t got) {
            return row.at(key).get<std::int64_t>() == got;
        };
        if (!expect("whitespaces", z.whitespaces) || !expect("loc", z.loc) || !expect("cyclo", z.cyclo) ||
            !expect("parse_errors", z.parse_errors)) {
            return fail(fmt::format("mismatch on {}: ws {} loc {} cyclo {} errors {}", nlohmann::json(src).dump(), z.whitespaces, z.loc,
                                    z.cyclo, z.parse_errors));
        }
    }
    if (rows.size() != 10) return fail(fmt::format("fixture has {} rows", rows.size()));
    return {true, "10 snippets match"};
}

bool same_outputs(const fs::path& a, const fs::path& b) {
    return read_file(a / "records.jsonl") == read_file(b / "records.jsonl") &&
           read_file(a / "causal_results.csv") == read_file(b / "causal_results.csv");
}

Outcome determinism() {
    testsupport::TempDir dir("acc-determinism");

    // stub backend, different thread counts
    auto c = fixture_config(dir / "random-a", "random:7");
    if (run_pipeline(c).exit_code != kExitOk) return fail("random backend run failed");
    c.output_dir = dir / "random-b";
    c.jobs = 3;
    if (run_pipeline(c).exit_code != kExitOk) return fail("random backend rerun failed");
    if (!same_outputs(dir / "random-a", dir / "random-b")) return fail("random backend outputs differ");

    // http backend against a local stub; the first run warms the cache
    auto h = fixture_config(dir / "http-cold", "http");
    h.cache_dir = dir / "cache";
    std::size_t served = 0;
    {
        testsupport::MockServer server(testsupport::MockServer::constant("value"));
        h.backend_url = server.url();
        if (run_pipeline(h).exit_code != kExitOk) return fail("cold http run failed");
        for (const char* name : {"http-warm-a", "http-warm-b"}) {
            h.output_dir = dir / name;
            if (run_pipeline(h).exit_code != kExitOk) return fail(std::string(name) + " failed");
        }
        served = server.requests();
    }
    if (!same_outputs(dir / "http-warm-a", dir / "http-warm-b")) return fail("warm runs differ");
    if (!same_outputs(dir / "http-cold", dir / "http-warm-a")) return fail("cold and warm runs differ");
    const auto m = testsupport::read_json(dir / "http-warm-b" / "run_manifest.json");
    if (m.at("cache").at("misses") != 0) return fail("warm run missed the cache");
    return {true, fmt::format("byte-identical across jobs and warm reruns, {} requests served once", served)};
}

}  // namespace

int main(int argc, char** argv) {
    const std::string filter = argc > 1 ? argv[1] : "";
    const std::vector<Criterion> criteria = {
        {"oracle end-to-end", 60, oracle_end_to_end},
        {"corruptor end-to-end", 0, corruptor_end_to_end},
        {"metric oracle equivalence", 0, metric_oracles},
        {"synthetic effect recovery", 10, synthetic_recovery},
        {"bootstrap coverage", 300, bootstrap_coverage},
        {"confounded-design correction", 0, confounded_design},
        {"mask-count pairing", 0, mask_pairing},
        {"logistic-fit optimality", 0, logistic_optimality},
        {"confounder fixtures", 0, confounder_fixture},
        {"determinism", 0, determinism},
    };
    int failed = 0, ran = 0;
    for (const auto& c : criteria) {
        if (!filter.empty() && c.name.find(filter) == std::string::npos) continue;
        ++ran;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = fail(std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (o.pass && c.time_limit_s > 0 && secs >= c.time_limit_s) {
            o = fail(fmt::format("took {:.1f} s, limit {:.0f} s; {}", secs, c.time_limit_s, o.detail));
        }
        failed += !o.pass;
        fmt::print("{} {} ({:.2f} s): {}\n", o.pass ? "PASS" : "FAIL", c.name, secs, o.detail);
        std::fflush(stdout);
    }
    fmt::print("{}/{} criteria passed\n", ran - failed, ran);
    return failed == 0 && ran > 0 ? 0 : 1;
}
