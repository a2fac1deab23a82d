#pragma once

#include "syntaxeval/features.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace syntaxeval::corpus {

struct Snippet {
    std::string id;
    std::string source;
    std::string origin;
    std::optional<features::ConfounderVector> features;

    friend bool operator==(const Snippet&, const Snippet&) = default;
};

struct Corpus {
    std::vector<Snippet> snippets;
    std::string description;  // where it came from
    std::string created_at;   // ISO-8601 UTC, informational only

    [[nodiscard]] std::size_t size() const { return snippets.size(); }
    [[nodiscard]] bool empty() const { return snippets.empty(); }

    // metadata is not part of identity
    friend bool operator==(const Corpus& a, const Corpus& b) { return a.snippets == b.snippets; }
};

struct IngestOptions {
    std::size_t max_bytes = 8192;
};

struct IngestStats {
    std::size_t lines = 0;      // non-blank lines read
    std::size_t oversized = 0;  // skipped for exceeding max_bytes
};

// Errors name the 1-based line: "line 2: invalid JSON". Ids missing from the
// file become the zero-padded 0-based line index ("000000").
[[nodiscard]] Corpus read_jsonl(std::istream& in, const IngestOptions& options = {},
                                IngestStats* stats = nullptr);
[[nodiscard]] Corpus ingest_jsonl(const std::filesystem::path& path, const IngestOptions& options = {},
                                  IngestStats* stats = nullptr);

void write_jsonl(const Corpus& corpus, std::ostream& out);
void save_jsonl(const Corpus& corpus, const std::filesystem::path& path);

// strip trailing whitespace from every line
[[nodiscard]] std::string normalize_source(std::string_view source);

// keeps the first snippet of each normalized source, order preserved
[[nodiscard]] Corpus dedup(const Corpus& corpus);

// min(n, size) snippets drawn without replacement, in draw order
[[nodiscard]] Corpus sample_subset(const Corpus& corpus, std::size_t n, std::uint64_t seed);

[[nodiscard]] std::string utc_timestamp();

}  // namespace syntaxeval::corpus
