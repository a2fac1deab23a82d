#pragma once

// Pipeline stages: corpus -> features -> masks -> fills and scores -> records
// -> causal analysis -> report. Every stage has a file form so it can be rerun
// on its own.

#include "syntaxeval/backend.hpp"
#include "syntaxeval/causal.hpp"
#include "syntaxeval/config.hpp"
#include "syntaxeval/corpus.hpp"
#include "syntaxeval/masking.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace syntaxeval {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitBackendUnreachable = 2;
inline constexpr int kExitEmptyCorpus = 3;

inline constexpr const char* kVersion = "0.1.0";

// Runs f(0..n-1) on up to `jobs` threads; the first exception is rethrown.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& f);

struct CorpusCounts {
    std::size_t lines = 0;
    std::size_t oversized = 0;
    std::size_t duplicates = 0;
    std::size_t sampled_out = 0;
    std::size_t kept = 0;
};

// ingest (size filter), dedup, optional sample
[[nodiscard]] corpus::Corpus prepare_corpus(const PipelineConfig& config, CorpusCounts* counts = nullptr);

// fills Snippet::features where missing
void annotate_features(corpus::Corpus& corpus, std::size_t jobs = 1);

struct MaskGroup {
    std::string snippet_id;
    std::string node_type;
    masking::MaskedSample treatment;
    std::vector<masking::MaskedSample> controls;
};

struct SkipCounts {
    std::size_t absent = 0;
    std::size_t too_many_masked = 0;
};

struct MaskOutput {
    std::vector<MaskGroup> groups;            // snippet order, then node-type order
    std::map<std::string, SkipCounts> skips;  // per node type
    std::map<std::string, std::size_t> treated;
};

// Control draws use derive_seed(seed, "control").
[[nodiscard]] MaskOutput mask_corpus(const corpus::Corpus& corpus, const PipelineConfig& config);

void write_masked_samples(const MaskOutput& masks, const std::filesystem::path& path);
[[nodiscard]] std::vector<MaskGroup> read_masked_samples(const std::filesystem::path& path);

// One treated and one averaged control record per group, in group order.
[[nodiscard]] std::vector<causal::EvaluationRecord> evaluate(const corpus::Corpus& corpus,
                                                             const std::vector<MaskGroup>& groups,
                                                             backend::Backend& backend, const PipelineConfig& config);

[[nodiscard]] std::string records_jsonl(const std::vector<causal::EvaluationRecord>& records);
[[nodiscard]] std::vector<causal::EvaluationRecord> read_records(const std::filesystem::path& path);

// node_type, arm, snippet_id and the three scores, one row per record
[[nodiscard]] std::string scores_by_node_type_csv(const std::vector<causal::EvaluationRecord>& records);

[[nodiscard]] causal::AnalysisOptions analysis_options(const PipelineConfig& config);

[[nodiscard]] std::unique_ptr<backend::Backend> make_backend(const PipelineConfig& config);

struct RunSummary {
    int exit_code = kExitOk;
    std::string message;
    std::size_t records = 0;
    std::size_t results = 0;
};

// Writes into config.output_dir: masked_samples.jsonl, records.jsonl,
// scores_by_node_type.csv, causal_results.csv, causal_results.json,
// report.txt and run_manifest.json.
[[nodiscard]] RunSummary run_pipeline(const PipelineConfig& config);

}  // namespace syntaxeval
