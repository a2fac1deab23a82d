#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace syntaxeval {

struct PipelineConfig {
    std::filesystem::path corpus_path;
    std::size_t max_bytes = 8192;
    std::optional<std::size_t> sample_size;  // all snippets when unset
    std::vector<std::string> node_types;     // defaults to the eleven study types
    std::string mask_sentinel = "<mask>";
    std::size_t control_variants = 20;
    double max_mask_fraction = 0.5;

    std::string backend = "http";
    std::string backend_url;  // falls back to $SYNTAXEVAL_BACKEND_URL
    int retries = 3;
    int backoff_ms = 250;
    int timeout_s = 30;
    std::size_t max_in_flight = 4;
    std::optional<std::filesystem::path> cache_dir;  // <output_dir>/cache for http
    int top_k = 1;
    std::string junk_token = "$$";

    std::size_t bootstrap_resamples = 500;
    bool refit = true;
    std::size_t min_group_size = 30;

    std::uint64_t seed = 42;
    std::size_t jobs = 1;
    std::filesystem::path output_dir = "syntaxeval_out";

    PipelineConfig();
};

// Layout:
//   seed, jobs, output_dir
//   [corpus]   path, max_bytes, sample_size
//   [masking]  node_types, mask_token, control_variants, max_mask_fraction
//   [backend]  spec, url, retries, backoff_ms, timeout_s, max_in_flight, cache_dir, top_k, junk_token
//   [analysis] bootstrap_resamples, refit, min_group_size
// Relative paths resolve against `base_dir`. Unknown keys are errors.
void apply_toml(PipelineConfig& config, const nlohmann::ordered_json& toml,
                const std::filesystem::path& base_dir = {});
void load_config_file(PipelineConfig& config, const std::filesystem::path& path);

// throws FormatError
void validate(const PipelineConfig& config);

[[nodiscard]] nlohmann::ordered_json to_json(const PipelineConfig& config);

[[nodiscard]] std::vector<std::string> split_list(const std::string& s);

}  // namespace syntaxeval
