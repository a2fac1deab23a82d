#include "syntaxeval/error.hpp"
#include "syntaxeval/json_io.hpp"
#include "syntaxeval/pipeline.hpp"
#include "syntaxeval/report.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <iostream>

namespace se = syntaxeval;
namespace fs = std::filesystem;

namespace {

// flags every subcommand accepts; unset ones leave the config untouched
struct CommonFlags {
    std::string config_path;
    std::string backend;
    std::string backend_url;
    std::uint64_t seed = 0;
    std::string node_types;
    std::size_t jobs = 1;
    std::string mask_token;
    std::string output_dir;

    std::vector<std::pair<CLI::Option*, std::function<void(se::PipelineConfig&)>>> setters;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "TOML config file")->check(CLI::ExistingFile);
        add(cmd->add_option("--backend", backend, "oracle | constant:<tok> | random:<seed> | corruptor | http"),
            [this](auto& c) { c.backend = backend; });
        add(cmd->add_option("--backend-url", backend_url, "base URL of the fill-mask server"),
            [this](auto& c) { c.backend_url = backend_url; });
        add(cmd->add_option("--seed", seed, "run seed"), [this](auto& c) { c.seed = seed; });
        add(cmd->add_option("--node-types", node_types, "comma-separated node types"),
            [this](auto& c) { c.node_types = se::split_list(node_types); });
        add(cmd->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber),
            [this](auto& c) { c.jobs = jobs; });
        add(cmd->add_option("--mask-token", mask_token, "mask sentinel sent to the model"),
            [this](auto& c) { c.mask_sentinel = mask_token; });
        add(cmd->add_option("-o,--output-dir", output_dir, "output directory"),
            [this](auto& c) { c.output_dir = output_dir; });
    }

    void add(CLI::Option* opt, std::function<void(se::PipelineConfig&)> f) { setters.emplace_back(opt, std::move(f)); }

    // defaults < TOML < flags
    se::PipelineConfig resolve() const {
        se::PipelineConfig config;
        if (!config_path.empty()) se::load_config_file(config, config_path);
        for (const auto& [opt, set] : setters)
            if (opt->count() > 0) set(config);
        se::validate(config);
        return config;
    }
};

fs::path or_default(const std::string& given, const fs::path& fallback) { return given.empty() ? fallback : fs::path(given); }

int cmd_ingest(const se::PipelineConfig& config, const fs::path& out) {
    se::CorpusCounts counts;
    auto corpus = se::prepare_corpus(config, &counts);
    fmt::print(stderr, "{} lines, {} oversized skipped, {} duplicates removed, {} sampled out, {} kept\n", counts.lines,
               counts.oversized, counts.duplicates, counts.sampled_out, counts.kept);
    if (corpus.empty()) {
        fmt::print(stderr, "error: effective corpus is empty\n");
        return se::kExitEmptyCorpus;
    }
    se::corpus::save_jsonl(corpus, out);
    fmt::print("{}\n", out.string());
    return se::kExitOk;
}

int cmd_features(const se::PipelineConfig& config, const fs::path& input, const fs::path& out) {
    auto corpus = se::corpus::ingest_jsonl(input, {config.max_bytes});
    if (corpus.empty()) return se::kExitEmptyCorpus;
    se::annotate_features(corpus, config.jobs);
    se::corpus::save_jsonl(corpus, out);
    fmt::print("{}\n", out.string());
    return se::kExitOk;
}

int cmd_mask(const se::PipelineConfig& config, const fs::path& input, const fs::path& out) {
    auto corpus = se::corpus::ingest_jsonl(input, {config.max_bytes});
    if (corpus.empty()) return se::kExitEmptyCorpus;
    const auto masks = se::mask_corpus(corpus, config);
    for (const auto& [nt, n] : masks.treated) {
        const auto& sk = masks.skips.at(nt);
        fmt::print(stderr, "{}: {} treated, {} absent, {} over mask fraction\n", nt, n, sk.absent, sk.too_many_masked);
    }
    se::write_masked_samples(masks, out);
    fmt::print("{}\n", out.string());
    return se::kExitOk;
}

int cmd_evaluate(const se::PipelineConfig& config, const fs::path& corpus_path, const fs::path& masks_path) {
    auto corpus = se::corpus::ingest_jsonl(corpus_path, {config.max_bytes});
    if (corpus.empty()) return se::kExitEmptyCorpus;
    const auto groups = se::read_masked_samples(masks_path);
    auto backend = se::make_backend(config);
    const auto records = se::evaluate(corpus, groups, *backend, config);
    se::write_file(config.output_dir / "records.jsonl", se::records_jsonl(records));
    se::write_file(config.output_dir / "scores_by_node_type.csv", se::scores_by_node_type_csv(records));
    fmt::print("{}\n", (config.output_dir / "records.jsonl").string());
    return records.empty() ? se::kExitEmptyCorpus : se::kExitOk;
}

int cmd_analyze(const se::PipelineConfig& config, const fs::path& records_path) {
    const auto records = se::read_records(records_path);
    if (records.empty()) {
        fmt::print(stderr, "error: no records in {}\n", records_path.string());
        return se::kExitEmptyCorpus;
    }
    const auto analysis = se::causal::run_causal_analysis(records, se::analysis_options(config));
    for (const auto& n : analysis.notices) fmt::print(stderr, "note: {}\n", n);
    se::write_file(config.output_dir / "causal_results.csv", se::causal::results_csv(analysis.results));
    se::write_file(config.output_dir / "causal_results.json", se::causal::results_json(analysis.results).dump(2) + "\n");
    const auto text = se::report_summary(analysis.results);
    se::write_file(config.output_dir / "report.txt", text);
    fmt::print("{}", text);
    return se::kExitOk;
}

int cmd_report(const fs::path& results_path) {
    const auto results = se::causal::results_from_json(se::json::parse(se::read_file(results_path)));
    fmt::print("{}", se::report_summary(results));
    return se::kExitOk;
}

int cmd_run(const se::PipelineConfig& config) {
    const auto summary = se::run_pipeline(config);
    if (summary.exit_code != se::kExitOk) {
        fmt::print(stderr, "error: {}\n", summary.message);
        return summary.exit_code;
    }
    fmt::print(stderr, "{} records, {} results in {}\n", summary.records, summary.results, config.output_dir.string());
    fmt::print("{}", se::read_file(config.output_dir / "report.txt"));
    return se::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Syntax-grounded evaluation of masked code models"};
    app.set_version_flag("--version", se::kVersion);
    app.require_subcommand(1);

    CommonFlags flags;
    std::string corpus_in, input, output, masks_in, records_in, results_in;
    std::size_t max_bytes = 0, sample = 0;

    auto* ingest = app.add_subcommand("ingest", "read, filter, dedup and sample a JSONL corpus");
    auto* features = app.add_subcommand("features", "add confounder features to a corpus");
    auto* mask = app.add_subcommand("mask", "write treatment and control masked samples");
    auto* evaluate = app.add_subcommand("evaluate", "fill masks with a backend and score them");
    auto* analyze = app.add_subcommand("analyze", "estimate treatment effects from records");
    auto* run = app.add_subcommand("run", "whole pipeline");
    auto* report = app.add_subcommand("report", "print the summary table of a causal_results.json");
    for (auto* cmd : {ingest, features, mask, evaluate, analyze, run, report}) flags.attach(cmd);

    for (auto* cmd : {ingest, run}) {
        flags.add(cmd->add_option("corpus,-i,--input", corpus_in, "corpus JSONL"), [&](auto& c) { c.corpus_path = corpus_in; });
        flags.add(cmd->add_option("--max-bytes", max_bytes, "skip larger snippets")->check(CLI::PositiveNumber),
                  [&](auto& c) { c.max_bytes = max_bytes; });
        flags.add(cmd->add_option("--sample", sample, "evaluate a random subset of this size")->check(CLI::PositiveNumber),
                  [&](auto& c) { c.sample_size = sample; });
    }
    features->add_option("input,-i,--input", input, "corpus JSONL (default <out>/corpus.jsonl)");
    mask->add_option("input,-i,--input", input, "corpus JSONL (default <out>/features.jsonl)");
    ingest->add_option("--output", output, "output JSONL (default <out>/corpus.jsonl)");
    features->add_option("--output", output, "output JSONL (default <out>/features.jsonl)");
    mask->add_option("--output", output, "output JSONL (default <out>/masked_samples.jsonl)");
    evaluate->add_option("--corpus", input, "corpus JSONL (default <out>/features.jsonl)");
    evaluate->add_option("--masks", masks_in, "masked samples (default <out>/masked_samples.jsonl)");
    analyze->add_option("records", records_in, "records JSONL (default <out>/records.jsonl)");
    report->add_option("results", results_in, "causal_results.json (default <out>/causal_results.json)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        const auto config = flags.resolve();
        const auto& out = config.output_dir;
        if (*ingest) return cmd_ingest(config, or_default(output, out / "corpus.jsonl"));
        if (*features)
            return cmd_features(config, or_default(input, out / "corpus.jsonl"), or_default(output, out / "features.jsonl"));
        if (*mask)
            return cmd_mask(config, or_default(input, out / "features.jsonl"), or_default(output, out / "masked_samples.jsonl"));
        if (*evaluate)
            return cmd_evaluate(config, or_default(input, out / "features.jsonl"),
                                or_default(masks_in, out / "masked_samples.jsonl"));
        if (*analyze) return cmd_analyze(config, or_default(records_in, out / "records.jsonl"));
        if (*report) return cmd_report(or_default(results_in, out / "causal_results.json"));
        if (*run) return cmd_run(config);
    } catch (const se::BackendError& e) {
        fmt::print(stderr, "error: backend unreachable: {}\n", e.what());
        return se::kExitBackendUnreachable;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return se::kExitError;
    }
    return se::kExitError;
}
