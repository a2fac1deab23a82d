#include "syntaxeval/corpus.hpp"
#include "syntaxeval/error.hpp"

#include "support/files.hpp"

#include <doctest.h>

#include <set>
#include <sstream>

using namespace syntaxeval;
using corpus::Corpus;
using corpus::Snippet;

namespace {

Corpus read(const std::string& text, corpus::IngestOptions o = {}, corpus::IngestStats* stats = nullptr) {
    std::istringstream in(text);
    return corpus::read_jsonl(in, o, stats);
}

Corpus of_sources(const std::vector<std::string>& sources) {
    Corpus c;
    for (std::size_t i = 0; i < sources.size(); ++i) c.snippets.push_back({std::to_string(i), sources[i], "", {}});
    return c;
}

std::string error_of(const std::string& text) {
    try {
        (void)read(text);
    } catch (const FormatError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("ids default to the zero-padded line index") {
    const auto c = read("{\"source\":\"a=1\"}\n{\"source\":\"b=2\"}\n{\"source\":\"c=3\"}\n");
    REQUIRE(c.size() == 3);
    CHECK(c.snippets[0].id == "000000");
    CHECK(c.snippets[1].id == "000001");
    CHECK(c.snippets[2].id == "000002");
}

TEST_CASE("explicit ids and origins are kept") {
    const auto c = read(R"({"id":"k1","source":"x","origin":"repo/a.py:3"})" "\n");
    REQUIRE(c.size() == 1);
    CHECK(c.snippets[0].id == "k1");
    CHECK(c.snippets[0].origin == "repo/a.py:3");
}

TEST_CASE("empty file") { CHECK(read("").empty()); }

TEST_CASE("error texts name the line") {
    CHECK(error_of("{\"source\":\"a\"}\nnot json\n") == "line 2: invalid JSON");
    CHECK(error_of("{\"source\":\"a\"}\n{\"src\":\"b\"}\n").find("line 2") == 0);
    CHECK(error_of("{\"source\":\"a\"}\n{\"src\":\"b\"}\n").find("source") != std::string::npos);
    CHECK(error_of("{\"source\":\"\"}\n").find("line 1") == 0);
    CHECK(error_of("{\"id\":\"a\",\"source\":\"x\"}\n{\"id\":\"a\",\"source\":\"y\"}\n").find("duplicate") != std::string::npos);
    CHECK(error_of("{\"source\":\"\xff\"}\n") == "line 1: invalid JSON");  // not UTF-8
}

TEST_CASE("unreadable file is an I/O error") {
    CHECK_THROWS_AS((void)corpus::ingest_jsonl("/nonexistent/corpus.jsonl"), IoError);
}

TEST_CASE("oversized snippets are skipped and counted") {
    corpus::IngestStats stats;
    const std::string big(9000, 'x');
    const auto c = read("{\"source\":\"a\"}\n{\"source\":\"" + big + "\"}\n\n{\"source\":\"b\"}\n", {}, &stats);
    CHECK(c.size() == 2);
    CHECK(stats.oversized == 1);
    CHECK(stats.lines == 3);
    CHECK(c.snippets[1].id == "000003");
    CHECK(read("{\"source\":\"abcd\"}\n", {3}).empty());
}

TEST_CASE("dedup") {
    CHECK(corpus::dedup(of_sources({"a=1", "a=1", "b=2"})).size() == 2);
    const auto d = corpus::dedup(of_sources({"a=1  \n", "a=1\n"}));
    REQUIRE(d.size() == 1);
    CHECK(d.snippets[0].source == "a=1  \n");  // first occurrence, unmodified
    const auto unique = of_sources({"x", "y", "z"});
    CHECK(corpus::dedup(unique) == unique);
    CHECK(corpus::normalize_source("a \t\nb  \r\n") == "a\nb\n");
}

TEST_CASE("dedup is idempotent and leaves no normalized duplicates") {
    const auto c = of_sources({"a", "a ", "b\t", "b", "c\n", "c \n", "a", "d"});
    const auto once = corpus::dedup(c);
    CHECK(corpus::dedup(once) == once);
    std::set<std::string> seen;
    for (const auto& s : once.snippets) CHECK(seen.insert(corpus::normalize_source(s.source)).second);
    CHECK(once.size() == 4);
}

TEST_CASE("sample_subset") {
    std::vector<std::string> sources;
    for (int i = 0; i < 100; ++i) sources.push_back("x = " + std::to_string(i));
    const auto c = of_sources(sources);
    CHECK(corpus::sample_subset(c, 0, 42).empty());

    const auto a = corpus::sample_subset(c, 10, 42);
    const auto b = corpus::sample_subset(c, 10, 42);
    REQUIRE(a.size() == 10);
    CHECK(a == b);
    std::set<std::string> ids;
    for (const auto& s : a.snippets) ids.insert(s.id);
    CHECK(ids.size() == 10);
    CHECK(!(corpus::sample_subset(c, 10, 43) == a));

    const auto all = corpus::sample_subset(c, 500, 42);
    CHECK(all.size() == 100);
    CHECK(!(all == c));  // permuted
    std::ostringstream sa, sb;
    corpus::write_jsonl(a, sa);
    corpus::write_jsonl(b, sb);
    CHECK(sa.str() == sb.str());
}

TEST_CASE("sample_subset draws uniformly") {
    std::vector<std::string> sources;
    for (int i = 0; i < 10; ++i) sources.push_back(std::to_string(i));
    const auto c = of_sources(sources);
    std::vector<int> hits(10, 0);
    const int trials = 4000;
    for (int s = 0; s < trials; ++s)
        for (const auto& x : corpus::sample_subset(c, 3, static_cast<std::uint64_t>(s)).snippets) ++hits[std::stoi(x.id)];
    // expected 1200 each; 5 sd is about 145
    for (int h : hits) CHECK(std::abs(h - 1200) < 150);
}

TEST_CASE("ingest, serialize, ingest round-trips") {
    const auto c = corpus::ingest_jsonl(testsupport::test_path("data/snippets.jsonl"));
    REQUIRE(c.size() == 300);
    std::ostringstream out;
    corpus::write_jsonl(c, out);
    CHECK(read(out.str()) == c);

    Corpus odd = of_sources({"s = \"\\u00e9\\n\"\n", "tab\there\r\n", "ünïcode = 'ok'"});
    odd.snippets[1].features = features::ConfounderVector{1, 2, 3, 4, 5, 6, 7};
    std::ostringstream o2;
    corpus::write_jsonl(odd, o2);
    CHECK(read(o2.str()) == odd);

    testsupport::TempDir dir("corpus");
    corpus::save_jsonl(c, dir / "c.jsonl");
    CHECK(corpus::ingest_jsonl(dir / "c.jsonl") == c);
}
