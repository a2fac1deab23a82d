#include "syntaxeval/config.hpp"

#include "syntaxeval/error.hpp"
#include "syntaxeval/json_io.hpp"
#include "syntaxeval/python_grammar.hpp"
#include "syntaxeval/toml.hpp"

#include <fmt/format.h>

namespace syntaxeval {

PipelineConfig::PipelineConfig() : node_types(grammar::default_study_node_types()) {}

namespace {

using ojson = nlohmann::ordered_json;

template <typename T>
T as(const ojson& v, const std::string& key) {
    try {
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw FormatError("");
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) throw FormatError("");
            if constexpr (std::is_unsigned_v<T>) {
                if (v.get<std::int64_t>() < 0) throw FormatError("");
            }
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) throw FormatError("");
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw FormatError("");
        }
        return v.get<T>();
    } catch (const std::exception&) {
        throw FormatError(fmt::format("config: bad value for \"{}\"", key));
    }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

void apply_toml(PipelineConfig& c, const ojson& toml, const std::filesystem::path& base) {
    for (const auto& [key, v] : toml.items()) {
        if (key == "seed") {
            c.seed = as<std::uint64_t>(v, key);
        } else if (key == "jobs") {
            c.jobs = as<std::size_t>(v, key);
        } else if (key == "output_dir") {
            c.output_dir = resolve(base, as<std::string>(v, key));
        } else if (key == "corpus" || key == "masking" || key == "backend" || key == "analysis") {
            if (!v.is_object()) throw FormatError(fmt::format("config: [{}] must be a table", key));
            for (const auto& [k, x] : v.items()) {
                const std::string name = key + "." + k;
                if (name == "corpus.path") {
                    c.corpus_path = resolve(base, as<std::string>(x, name));
                } else if (name == "corpus.max_bytes") {
                    c.max_bytes = as<std::size_t>(x, name);
                } else if (name == "corpus.sample_size") {
                    c.sample_size = as<std::size_t>(x, name);
                } else if (name == "masking.node_types") {
                    if (!x.is_array()) throw FormatError("config: masking.node_types must be an array");
                    c.node_types.clear();
                    for (const auto& e : x) c.node_types.push_back(as<std::string>(e, name));
                } else if (name == "masking.mask_token") {
                    c.mask_sentinel = as<std::string>(x, name);
                } else if (name == "masking.control_variants") {
                    c.control_variants = as<std::size_t>(x, name);
                } else if (name == "masking.max_mask_fraction") {
                    c.max_mask_fraction = as<double>(x, name);
                } else if (name == "backend.spec") {
                    c.backend = as<std::string>(x, name);
                } else if (name == "backend.url") {
                    c.backend_url = as<std::string>(x, name);
                } else if (name == "backend.retries") {
                    c.retries = as<int>(x, name);
                } else if (name == "backend.backoff_ms") {
                    c.backoff_ms = as<int>(x, name);
                } else if (name == "backend.timeout_s") {
                    c.timeout_s = as<int>(x, name);
                } else if (name == "backend.max_in_flight") {
                    c.max_in_flight = as<std::size_t>(x, name);
                } else if (name == "backend.cache_dir") {
                    c.cache_dir = resolve(base, as<std::string>(x, name));
                } else if (name == "backend.top_k") {
                    c.top_k = as<int>(x, name);
                } else if (name == "backend.junk_token") {
                    c.junk_token = as<std::string>(x, name);
                } else if (name == "analysis.bootstrap_resamples") {
                    c.bootstrap_resamples = as<std::size_t>(x, name);
                } else if (name == "analysis.refit") {
                    c.refit = as<bool>(x, name);
                } else if (name == "analysis.min_group_size") {
                    c.min_group_size = as<std::size_t>(x, name);
                } else {
                    throw FormatError(fmt::format("config: unknown key \"{}\"", name));
                }
            }
        } else {
            throw FormatError(fmt::format("config: unknown key \"{}\"", key));
        }
    }
}

void load_config_file(PipelineConfig& config, const std::filesystem::path& path) {
    const auto text = read_file(path);
    try {
        apply_toml(config, toml::parse(text), path.parent_path());
    } catch (const FormatError& e) {
        throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

void validate(const PipelineConfig& c) {
    auto need = [](bool ok, const char* what) {
        if (!ok) throw FormatError(fmt::format("config: {}", what));
    };
    need(!c.node_types.empty(), "node_types must not be empty");
    for (const auto& t : c.node_types) {
        if (!grammar::is_node_type(t)) throw FormatError(fmt::format("config: \"{}\" is not a Python grammar node type", t));
    }
    need(!c.mask_sentinel.empty(), "mask_token must not be empty");
    need(c.control_variants >= 1, "control_variants must be at least 1");
    need(c.max_mask_fraction > 0.0 && c.max_mask_fraction <= 1.0, "max_mask_fraction must be in (0, 1]");
    need(c.max_bytes >= 1, "max_bytes must be at least 1");
    need(!c.sample_size || *c.sample_size >= 1, "sample_size must be at least 1");
    need(c.bootstrap_resamples >= 1, "bootstrap_resamples must be at least 1");
    need(c.jobs >= 1, "jobs must be at least 1");
    need(c.retries >= 0, "retries must be non-negative");
    need(c.backoff_ms >= 0, "backoff_ms must be non-negative");
    need(c.timeout_s >= 1, "timeout_s must be at least 1");
    need(c.max_in_flight >= 1, "max_in_flight must be at least 1");
    need(c.top_k >= 1, "top_k must be at least 1");
    need(c.min_group_size >= 1, "min_group_size must be at least 1");
    need(!c.output_dir.empty(), "output_dir must be set");
}

nlohmann::ordered_json to_json(const PipelineConfig& c) {
    ojson j = ojson::object();
    j["corpus_path"] = c.corpus_path.string();
    j["max_bytes"] = c.max_bytes;
    j["sample_size"] = c.sample_size ? ojson(*c.sample_size) : ojson(nullptr);
    j["node_types"] = c.node_types;
    j["mask_token"] = c.mask_sentinel;
    j["control_variants"] = c.control_variants;
    j["max_mask_fraction"] = c.max_mask_fraction;
    j["backend"] = c.backend;
    j["backend_url"] = c.backend_url;
    j["retries"] = c.retries;
    j["backoff_ms"] = c.backoff_ms;
    j["timeout_s"] = c.timeout_s;
    j["max_in_flight"] = c.max_in_flight;
    j["cache_dir"] = c.cache_dir ? ojson(c.cache_dir->string()) : ojson(nullptr);
    j["top_k"] = c.top_k;
    j["junk_token"] = c.junk_token;
    j["bootstrap_resamples"] = c.bootstrap_resamples;
    j["refit"] = c.refit;
    j["min_group_size"] = c.min_group_size;
    j["seed"] = c.seed;
    j["jobs"] = c.jobs;
    j["output_dir"] = c.output_dir.string();
    return j;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        auto comma = s.find(',', pos);
        if (comma == std::string::npos) comma = s.size();
        auto item = s.substr(pos, comma - pos);
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
        pos = comma + 1;
    }
    return out;
}

}  // namespace syntaxeval
