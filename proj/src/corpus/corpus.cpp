#include "syntaxeval/corpus.hpp"

#include "syntaxeval/error.hpp"
#include "syntaxeval/json_io.hpp"
#include "syntaxeval/random.hpp"

#include <fmt/chrono.h>
#include <fmt/format.h>

#include <chrono>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

namespace syntaxeval::corpus {

namespace {

bool blank(std::string_view s) {
    return s.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

}  // namespace

Corpus read_jsonl(std::istream& in, const IngestOptions& options, IngestStats* stats) {
    Corpus c;
    c.created_at = utc_timestamp();
    IngestStats local;
    std::unordered_set<std::string> ids;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (blank(line)) continue;
        ++local.lines;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error&) {
            throw FormatError(fmt::format("line {}: invalid JSON", lineno));
        }
        if (!j.is_object()) throw FormatError(fmt::format("line {}: expected a JSON object", lineno));
        auto src = j.find("source");
        if (src == j.end() || !src->is_string()) {
            throw FormatError(fmt::format("line {}: missing string field \"source\"", lineno));
        }
        Snippet s;
        s.source = src->get<std::string>();
        if (s.source.empty()) throw FormatError(fmt::format("line {}: empty \"source\"", lineno));
        if (auto id = j.find("id"); id != j.end() && !id->is_null()) {
            if (!id->is_string()) throw FormatError(fmt::format("line {}: \"id\" must be a string", lineno));
            s.id = id->get<std::string>();
        } else {
            s.id = fmt::format("{:06d}", lineno - 1);
        }
        if (auto origin = j.find("origin"); origin != j.end() && !origin->is_null()) {
            if (!origin->is_string()) throw FormatError(fmt::format("line {}: \"origin\" must be a string", lineno));
            s.origin = origin->get<std::string>();
        }
        if (auto f = j.find("features"); f != j.end() && !f->is_null()) {
            try {
                s.features = confounders_from_json(*f);
            } catch (const FormatError& e) {
                throw FormatError(fmt::format("line {}: {}", lineno, e.what()));
            }
        }
        if (s.source.size() > options.max_bytes) {
            ++local.oversized;
            continue;
        }
        if (!ids.insert(s.id).second) throw FormatError(fmt::format("line {}: duplicate id \"{}\"", lineno, s.id));
        c.snippets.push_back(std::move(s));
    }
    if (in.bad()) throw IoError("read error");
    if (stats) *stats = local;
    return c;
}

Corpus ingest_jsonl(const std::filesystem::path& path, const IngestOptions& options, IngestStats* stats) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot read {}", path.string()));
    Corpus c = read_jsonl(in, options, stats);
    c.description = path.string();
    return c;
}

void write_jsonl(const Corpus& corpus, std::ostream& out) {
    for (const auto& s : corpus.snippets) out << to_json(s).dump() << '\n';
}

void save_jsonl(const Corpus& corpus, const std::filesystem::path& path) {
    std::ostringstream out;
    write_jsonl(corpus, out);
    write_file(path, out.str());
}

std::string normalize_source(std::string_view source) {
    std::string out;
    out.reserve(source.size());
    std::size_t pos = 0;
    while (pos <= source.size()) {
        const auto nl = source.find('\n', pos);
        const auto end = nl == std::string_view::npos ? source.size() : nl;
        auto line = source.substr(pos, end - pos);
        const auto last = line.find_last_not_of(" \t\r\f\v");
        out += line.substr(0, last == std::string_view::npos ? 0 : last + 1);
        if (nl == std::string_view::npos) break;
        out += '\n';
        pos = nl + 1;
    }
    return out;
}

Corpus dedup(const Corpus& corpus) {
    Corpus out;
    out.description = corpus.description;
    out.created_at = corpus.created_at;
    std::unordered_set<std::string> seen;
    for (const auto& s : corpus.snippets) {
        if (seen.insert(normalize_source(s.source)).second) out.snippets.push_back(s);
    }
    return out;
}

Corpus sample_subset(const Corpus& corpus, std::size_t n, std::uint64_t seed) {
    Corpus out;
    out.description = corpus.description;
    out.created_at = corpus.created_at;
    const std::size_t total = corpus.size();
    const std::size_t take = std::min(n, total);
    std::vector<std::size_t> order(total);
    for (std::size_t i = 0; i < total; ++i) order[i] = i;
    Rng rng(derive_seed(seed, {hash_string("sample_subset")}));
    // partial Fisher-Yates
    for (std::size_t i = 0; i < take; ++i) {
        const std::size_t j = i + uniform_index(rng, total - i);
        std::swap(order[i], order[j]);
        out.snippets.push_back(corpus.snippets[order[i]]);
    }
    return out;
}

std::string utc_timestamp() {
    const auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
    return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::to_time_t(now)));
}

}  // namespace syntaxeval::corpus
