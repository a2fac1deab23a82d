#include "syntaxeval/pipeline.hpp"

#include "syntaxeval/error.hpp"
#include "syntaxeval/json_io.hpp"
#include "syntaxeval/python_parser.hpp"
#include "syntaxeval/random.hpp"
#include "syntaxeval/report.hpp"

#include <Eigen/Core>
#include <fmt/format.h>

#include <atomic>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>
#include <unordered_map>

namespace syntaxeval {

using ojson = nlohmann::ordered_json;

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& f) {
    jobs = std::max<std::size_t>(1, std::min(jobs, n));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < jobs; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next++;
                if (i >= n) return;
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next = n;  // stop handing out work
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

corpus::Corpus prepare_corpus(const PipelineConfig& config, CorpusCounts* counts) {
    corpus::IngestStats stats;
    corpus::Corpus raw = corpus::ingest_jsonl(config.corpus_path, {config.max_bytes}, &stats);
    corpus::Corpus unique = corpus::dedup(raw);
    CorpusCounts c;
    c.lines = stats.lines;
    c.oversized = stats.oversized;
    c.duplicates = raw.size() - unique.size();
    if (config.sample_size) {
        corpus::Corpus sampled = corpus::sample_subset(unique, *config.sample_size, derive_seed(config.seed, {hash_string("sample")}));
        c.sampled_out = unique.size() - sampled.size();
        unique = std::move(sampled);
    }
    c.kept = unique.size();
    if (counts) *counts = c;
    return unique;
}

void annotate_features(corpus::Corpus& corpus, std::size_t jobs) {
    parallel_for(corpus.size(), jobs, [&](std::size_t i) {
        auto& s = corpus.snippets[i];
        if (!s.features) s.features = features::extract_confounders(s.source);
    });
}

MaskOutput mask_corpus(const corpus::Corpus& corpus, const PipelineConfig& config) {
    struct PerSnippet {
        std::vector<MaskGroup> groups;
        std::vector<std::pair<std::string, masking::SkipReason>> skips;
    };
    std::vector<PerSnippet> per(corpus.size());
    const std::uint64_t control_seed = derive_seed(config.seed, {hash_string("control")});
    parallel_for(corpus.size(), config.jobs, [&](std::size_t i) {
        const auto& s = corpus.snippets[i];
        const auto tree = ast::parse_python(s.source);
        for (const auto& nt : config.node_types) {
            auto r = masking::mask_treatment(s, tree, nt, config.mask_sentinel, config.max_mask_fraction);
            if (auto* skip = std::get_if<masking::Skip>(&r)) {
                per[i].skips.emplace_back(nt, skip->reason);
                continue;
            }
            auto& t = std::get<masking::MaskedSample>(r);
            auto controls = masking::mask_control(s, tree, t.mask_count, control_seed, config.control_variants,
                                                  config.mask_sentinel, nt);
            per[i].groups.push_back({s.id, nt, std::move(t), std::move(controls)});
        }
    });
    MaskOutput out;
    for (const auto& nt : config.node_types) {
        out.skips[nt];
        out.treated[nt];
    }
    for (auto& p : per) {
        for (auto& g : p.groups) {
            ++out.treated[g.node_type];
            out.groups.push_back(std::move(g));
        }
        for (const auto& [nt, reason] : p.skips) {
            auto& sc = out.skips[nt];
            ++(reason == masking::SkipReason::Absent ? sc.absent : sc.too_many_masked);
        }
    }
    return out;
}

void write_masked_samples(const MaskOutput& masks, const std::filesystem::path& path) {
    std::string out;
    for (const auto& g : masks.groups) {
        out += masking::to_json(g.treatment).dump() + '\n';
        for (const auto& c : g.controls) out += masking::to_json(c).dump() + '\n';
    }
    write_file(path, out);
}

std::vector<MaskGroup> read_masked_samples(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot read {}", path.string()));
    std::vector<MaskGroup> groups;
    std::map<std::pair<std::string, std::string>, std::size_t> index;
    std::vector<std::vector<masking::MaskedSample>> pending_controls;
    std::string line;
    std::size_t lineno = 0;
    auto slot = [&](const masking::MaskedSample& s) -> std::size_t {
        auto key = std::make_pair(s.snippet_id, s.node_type);
        auto it = index.find(key);
        if (it != index.end()) return it->second;
        index.emplace(key, groups.size());
        groups.push_back({s.snippet_id, s.node_type, {}, {}});
        pending_controls.emplace_back();
        return groups.size() - 1;
    };
    std::vector<bool> has_treatment;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        ojson j;
        try {
            j = ojson::parse(line);
        } catch (const ojson::parse_error&) {
            throw FormatError(fmt::format("{}: line {}: invalid JSON", path.string(), lineno));
        }
        masking::MaskedSample s;
        try {
            s = masking::masked_sample_from_json(j);
        } catch (const FormatError& e) {
            throw FormatError(fmt::format("{}: line {}: {}", path.string(), lineno, e.what()));
        }
        const auto k = slot(s);
        has_treatment.resize(groups.size(), false);
        if (s.arm == masking::Arm::Treatment) {
            if (has_treatment[k]) {
                throw FormatError(fmt::format("{}: line {}: second treatment sample for {} / {}", path.string(), lineno,
                                              s.snippet_id, s.node_type));
            }
            has_treatment[k] = true;
            groups[k].treatment = std::move(s);
        } else {
            groups[k].controls.push_back(std::move(s));
        }
    }
    for (std::size_t k = 0; k < groups.size(); ++k) {
        if (!has_treatment[k] || groups[k].controls.empty()) {
            throw FormatError(fmt::format("{}: {} / {} needs one treatment and at least one control sample",
                                          path.string(), groups[k].snippet_id, groups[k].node_type));
        }
    }
    return groups;
}

std::vector<causal::EvaluationRecord> evaluate(const corpus::Corpus& corpus, const std::vector<MaskGroup>& groups,
                                               backend::Backend& be, const PipelineConfig& config) {
    std::unordered_map<std::string, const corpus::Snippet*> by_id;
    for (const auto& s : corpus.snippets) by_id.emplace(s.id, &s);
    std::vector<std::array<causal::EvaluationRecord, 2>> out(groups.size());

    parallel_for(groups.size(), config.jobs, [&](std::size_t i) {
        const auto& g = groups[i];
        auto it = by_id.find(g.snippet_id);
        if (it == by_id.end()) throw FormatError(fmt::format("masked sample refers to unknown snippet {}", g.snippet_id));
        const auto& snippet = *it->second;
        const auto z = snippet.features ? *snippet.features : features::extract_confounders(snippet.source);

        auto score = [&](const masking::MaskedSample& s) {
            const auto response = backend::fill_masks(be, backend::make_request(s, config.top_k), &s);
            return metrics::score_sample(snippet.source, backend::reconstruct(s, response));
        };
        causal::EvaluationRecord t1{g.snippet_id, g.node_type, 1, score(g.treatment), z, g.treatment.mask_count, 1};
        metrics::SimilarityScores sum{0.0, 0.0, 0.0};
        for (const auto& c : g.controls) {
            if (c.mask_count != g.treatment.mask_count) {
                throw MaskingError(fmt::format("snippet {} / {}: control masks {} tokens, treatment {}", g.snippet_id,
                                               g.node_type, c.mask_count, g.treatment.mask_count));
            }
            const auto s = score(c);
            sum.jaccard += s.jaccard;
            sum.levenshtein += s.levenshtein;
            sum.sorensen_dice += s.sorensen_dice;
        }
        const auto n = static_cast<double>(g.controls.size());
        metrics::SimilarityScores mean{sum.jaccard / n, sum.levenshtein / n, sum.sorensen_dice / n};
        causal::EvaluationRecord t0{g.snippet_id, g.node_type, 0, mean, z, g.treatment.mask_count, g.controls.size()};
        out[i] = {std::move(t1), std::move(t0)};
    });

    std::vector<causal::EvaluationRecord> records;
    records.reserve(2 * out.size());
    for (auto& pair : out) {
        records.push_back(std::move(pair[0]));
        records.push_back(std::move(pair[1]));
    }
    return records;
}

std::string records_jsonl(const std::vector<causal::EvaluationRecord>& records) {
    std::string out;
    for (const auto& r : records) out += causal::to_json(r).dump() + '\n';
    return out;
}

std::vector<causal::EvaluationRecord> read_records(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot read {}", path.string()));
    std::vector<causal::EvaluationRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(causal::record_from_json(ojson::parse(line)));
        } catch (const ojson::parse_error&) {
            throw FormatError(fmt::format("{}: line {}: invalid JSON", path.string(), lineno));
        } catch (const FormatError& e) {
            throw FormatError(fmt::format("{}: line {}: {}", path.string(), lineno, e.what()));
        }
    }
    return out;
}

std::string scores_by_node_type_csv(const std::vector<causal::EvaluationRecord>& records) {
    std::vector<const causal::EvaluationRecord*> rows;
    for (const auto& r : records) rows.push_back(&r);
    std::stable_sort(rows.begin(), rows.end(), [](const auto* a, const auto* b) {
        return std::tie(a->node_type, a->treatment) < std::tie(b->node_type, b->treatment);
    });
    std::string out = "node_type,arm,snippet_id,jaccard,levenshtein,sorensen_dice\n";
    for (const auto* r : rows) {
        out += fmt::format("{},{},{},{},{},{}\n", r->node_type, r->treatment ? "T1" : "T0", r->snippet_id,
                           format_double(r->outcomes.jaccard), format_double(r->outcomes.levenshtein),
                           format_double(r->outcomes.sorensen_dice));
    }
    return out;
}

causal::AnalysisOptions analysis_options(const PipelineConfig& config) {
    causal::AnalysisOptions o;
    o.bootstrap_resamples = config.bootstrap_resamples;
    o.refit = config.refit;
    o.seed = derive_seed(config.seed, {hash_string("analysis")});
    o.min_group_size = config.min_group_size;
    o.node_types = config.node_types;
    return o;
}

std::unique_ptr<backend::Backend> make_backend(const PipelineConfig& config) {
    backend::BackendOptions o;
    o.http.base_url = config.backend_url;
    o.http.retries = config.retries;
    o.http.backoff = std::chrono::milliseconds(config.backoff_ms);
    o.http.timeout = std::chrono::milliseconds(1000LL * config.timeout_s);
    o.http.max_in_flight = config.max_in_flight;
    o.cache_dir = config.cache_dir ? config.cache_dir : std::optional(config.output_dir / "cache");
    o.junk_token = config.junk_token;
    return backend::make_backend(config.backend, o);
}

namespace {

ojson versions() {
    return {{"syntaxeval", kVersion},
            {"grammar", "tree-sitter-python 0.21 node inventory (built-in parser)"},
            {"eigen", fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION)},
            {"fmt", FMT_VERSION},
            {"nlohmann_json", fmt::format("{}.{}.{}", NLOHMANN_JSON_VERSION_MAJOR, NLOHMANN_JSON_VERSION_MINOR,
                                          NLOHMANN_JSON_VERSION_PATCH)}};
}

}  // namespace

RunSummary run_pipeline(const PipelineConfig& config) {
    validate(config);
    const auto started = corpus::utc_timestamp();
    std::filesystem::create_directories(config.output_dir);
    RunSummary summary;
    ojson manifest = ojson::object();
    manifest["tool"] = "syntaxeval";
    manifest["config"] = to_json(config);
    manifest["seeds"] = {{"run", config.seed},
                         {"sample", derive_seed(config.seed, {hash_string("sample")})},
                         {"control", derive_seed(config.seed, {hash_string("control")})},
                         {"analysis", derive_seed(config.seed, {hash_string("analysis")})}};
    manifest["versions"] = versions();
    ojson notices = ojson::array();

    auto finish = [&](int code, std::string message) {
        summary.exit_code = code;
        summary.message = std::move(message);
        manifest["status"] = {{"exit_code", code}, {"message", summary.message}};
        manifest["notices"] = notices;
        manifest["started_at"] = started;
        manifest["finished_at"] = corpus::utc_timestamp();
        write_file(config.output_dir / "run_manifest.json", manifest.dump(2) + "\n");
        return summary;
    };

    CorpusCounts counts;
    corpus::Corpus corpus = prepare_corpus(config, &counts);
    manifest["corpus"] = {{"lines", counts.lines},
                          {"skipped_oversized", counts.oversized},
                          {"duplicates_removed", counts.duplicates},
                          {"sampled_out", counts.sampled_out},
                          {"snippets", counts.kept}};
    if (corpus.empty()) return finish(kExitEmptyCorpus, "effective corpus is empty");

    annotate_features(corpus, config.jobs);
    const MaskOutput masks = mask_corpus(corpus, config);
    write_masked_samples(masks, config.output_dir / "masked_samples.jsonl");
    ojson per_type = ojson::object();
    for (const auto& nt : config.node_types) {
        const auto& sk = masks.skips.at(nt);
        per_type[nt] = {{"treated", masks.treated.at(nt)},
                        {"controls", masks.treated.at(nt) * config.control_variants},
                        {"skipped_absent", sk.absent},
                        {"skipped_too_many_masked", sk.too_many_masked}};
    }
    manifest["masking"] = per_type;

    std::vector<causal::EvaluationRecord> records;
    try {
        auto be = make_backend(config);
        manifest["backend_id"] = be->id();
        records = evaluate(corpus, masks.groups, *be, config);
        if (auto* cached = dynamic_cast<backend::CachedBackend*>(be.get())) {
            manifest["cache"] = {{"hits", cached->hits()}, {"misses", cached->misses()}};
        }
    } catch (const BackendError& e) {
        return finish(kExitBackendUnreachable, e.what());
    }
    summary.records = records.size();
    manifest["records"] = records.size();
    write_file(config.output_dir / "records.jsonl", records_jsonl(records));
    write_file(config.output_dir / "scores_by_node_type.csv", scores_by_node_type_csv(records));
    if (records.empty()) return finish(kExitEmptyCorpus, "no snippet contains any requested node type");

    const auto analysis = causal::run_causal_analysis(records, analysis_options(config));
    for (const auto& n : analysis.notices) notices.push_back(n);
    summary.results = analysis.results.size();
    write_file(config.output_dir / "causal_results.csv", causal::results_csv(analysis.results));
    write_file(config.output_dir / "causal_results.json", causal::results_json(analysis.results).dump(2) + "\n");
    write_file(config.output_dir / "report.txt", report_summary(analysis.results));
    return finish(kExitOk, "ok");
}

}  // namespace syntaxeval
