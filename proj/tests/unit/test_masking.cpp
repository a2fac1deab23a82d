#include "syntaxeval/error.hpp"
#include "syntaxeval/masking.hpp"
#include "syntaxeval/python_parser.hpp"

#include "support/files.hpp"

#include <doctest.h>

#include <set>

using namespace syntaxeval;
using masking::MaskedSample;
using masking::Skip;

namespace {

corpus::Snippet snip(std::string source, std::string id = "s0") { return {std::move(id), std::move(source), "", {}}; }

std::variant<MaskedSample, Skip> treat(const std::string& src, const std::string& type, double fraction = 1.0) {
    const auto s = snip(src);
    return masking::mask_treatment(s, ast::parse_python(src), type, masking::kDefaultSentinel, fraction);
}

// every invariant of a single sample
void check_sample(const MaskedSample& m, const std::string& source) {
    CHECK(m.mask_count == m.masked_spans.size());
    CHECK(m.mask_count == m.ground_truth_tokens.size());
    CHECK(m.mask_count == masking::count_occurrences(m.masked_text, m.mask_sentinel));
    for (std::size_t i = 0; i < m.masked_spans.size(); ++i) {
        const auto& r = m.masked_spans[i];
        CHECK(r.start < r.end);
        if (i) CHECK(m.masked_spans[i - 1].end <= r.start);
        CHECK(source.substr(r.start, r.size()) == m.ground_truth_tokens[i]);
    }
    CHECK(masking::fill(m, m.ground_truth_tokens) == source);

    // independent reconstruction: walk the masked text, splice tokens at sentinels
    std::string rebuilt;
    std::size_t pos = 0, k = 0;
    for (auto p = m.masked_text.find(m.mask_sentinel); p != std::string::npos;
         p = m.masked_text.find(m.mask_sentinel, pos)) {
        rebuilt += m.masked_text.substr(pos, p - pos) + m.ground_truth_tokens.at(k++);
        pos = p + m.mask_sentinel.size();
    }
    rebuilt += m.masked_text.substr(pos);
    CHECK(rebuilt == source);
}

}  // namespace

TEST_CASE("treatment examples") {
    const auto a = treat("x = y", "identifier");
    REQUIRE(std::holds_alternative<MaskedSample>(a));
    const auto& m = std::get<MaskedSample>(a);
    CHECK(m.masked_text == "<mask> = <mask>");
    CHECK(m.mask_count == 2);
    CHECK(m.ground_truth_tokens == std::vector<std::string>{"x", "y"});
    CHECK(m.arm == masking::Arm::Treatment);
    CHECK(!m.variant_index);

    const auto b = treat("x = 1", "while_statement");
    REQUIRE(std::holds_alternative<Skip>(b));
    CHECK(std::get<Skip>(b).reason == masking::SkipReason::Absent);

    const auto c = treat("return x", "return_statement");
    REQUIRE(std::holds_alternative<MaskedSample>(c));
    CHECK(std::get<MaskedSample>(c).mask_count == 2);
    CHECK(std::get<MaskedSample>(c).ground_truth_tokens == std::vector<std::string>{"return", "x"});
}

TEST_CASE("mask fraction limit") {
    // 2 of 3 tokens
    const auto r = treat("x = y", "identifier", 0.5);
    REQUIRE(std::holds_alternative<Skip>(r));
    CHECK(std::get<Skip>(r).reason == masking::SkipReason::TooManyMasked);
    CHECK(std::get<Skip>(r).mask_count == 2);
    CHECK(std::get<Skip>(r).token_count == 3);
    // exactly half is allowed
    CHECK(std::holds_alternative<MaskedSample>(treat("f(x)", "identifier", 0.5)));
}

TEST_CASE("nested matches are unioned") {
    const std::string src = "if a:\n    if b:\n        c\n";
    const auto r = treat(src, "if_statement");
    REQUIRE(std::holds_alternative<MaskedSample>(r));
    const auto& m = std::get<MaskedSample>(r);
    CHECK(m.mask_count == 7);  // if a : if b : c, none twice
    check_sample(m, src);
}

TEST_CASE("sentinel already in the source is an error") {
    const std::string src = "s = '<mask>'";
    CHECK_THROWS_AS((void)treat(src, "identifier"), MaskingError);
    const auto s = snip(src);
    CHECK_THROWS_AS((void)masking::mask_control(s, ast::parse_python(src), 1, 1), MaskingError);
}

TEST_CASE("control masking") {
    const std::string src = "total = price * count + fee";  // 7 leaf tokens
    const auto s = snip(src, "abc");
    const auto tree = ast::parse_python(src);
    const auto a = masking::mask_control(s, tree, 2, 99, 20, "<mask>", "identifier");
    const auto b = masking::mask_control(s, tree, 2, 99, 20, "<mask>", "identifier");
    REQUIRE(a.size() == 20);
    CHECK(a == b);
    std::set<std::vector<ast::ByteRange>> distinct;
    for (std::size_t v = 0; v < a.size(); ++v) {
        CHECK(a[v].arm == masking::Arm::Control);
        CHECK(a[v].variant_index == v);
        CHECK(a[v].mask_count == 2);
        CHECK(a[v].node_type == "identifier");
        check_sample(a[v], src);
        distinct.insert({a[v].masked_spans.begin(), a[v].masked_spans.end()});
    }
    CHECK(distinct.size() > 5);

    // saturation: every variant masks everything
    const auto all = masking::mask_control(s, tree, 7, 1);
    for (const auto& m : all) CHECK(m.masked_text == all.front().masked_text);
    CHECK(all.front().mask_count == 7);

    CHECK_THROWS_WITH_AS((void)masking::mask_control(s, tree, 8, 1), doctest::Contains("abc"), MaskingError);
}

TEST_CASE("control draw depends only on seed, snippet id, variant and k") {
    const std::string src = "a = b + c - d * e";
    const auto tree = ast::parse_python(src);
    const auto x = masking::mask_control(snip(src, "id1"), tree, 3, 5, 4);
    const auto more = masking::mask_control(snip(src, "id1"), tree, 3, 5, 10, "<mask>", "string");
    for (std::size_t v = 0; v < x.size(); ++v) CHECK(x[v].masked_spans == more[v].masked_spans);
    const auto other_id = masking::mask_control(snip(src, "id2"), tree, 3, 5, 4);
    const auto other_seed = masking::mask_control(snip(src, "id1"), tree, 3, 6, 4);
    bool id_differs = false, seed_differs = false;
    for (std::size_t v = 0; v < x.size(); ++v) {
        id_differs |= x[v].masked_spans != other_id[v].masked_spans;
        seed_differs |= x[v].masked_spans != other_seed[v].masked_spans;
    }
    CHECK(id_differs);
    CHECK(seed_differs);
}

TEST_CASE("controls draw uniformly over all leaf tokens") {
    const std::string src = "a = b + c - d";  // 7 leaves
    const auto tree = ast::parse_python(src);
    std::map<std::uint32_t, int> hits;
    const int variants = 7000;
    for (const auto& m : masking::mask_control(snip(src), tree, 1, 3, variants)) ++hits[m.masked_spans[0].start];
    CHECK(hits.size() == 7);
    for (const auto& [pos, n] : hits) CHECK(std::abs(n - 1000) < 150);
}

TEST_CASE("paired controls on the fixture corpus keep the treatment mask count") {
    const auto rows = testsupport::read_jsonl(testsupport::test_path("data/snippets.jsonl"));
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < 40; ++i) {
        const auto s = snip(rows[i].at("source"), rows[i].at("id"));
        const auto tree = ast::parse_python(s.source);
        for (const char* type : {"identifier", "string", "return_statement", "comparison_operator"}) {
            const auto r = masking::mask_treatment(s, tree, type);
            if (!std::holds_alternative<MaskedSample>(r)) continue;
            const auto& t = std::get<MaskedSample>(r);
            check_sample(t, s.source);
            const auto controls = masking::mask_control(s, tree, t.mask_count, 11, 20, "<mask>", type);
            CHECK(controls.size() == 20);
            for (const auto& c : controls) {
                CHECK(c.mask_count == t.mask_count);
                check_sample(c, s.source);
            }
            ++pairs;
        }
    }
    CHECK(pairs > 60);
}

TEST_CASE("custom sentinel") {
    const auto s = snip("x = y");
    const auto r = masking::mask_treatment(s, ast::parse_python(s.source), "identifier", "[MASK]", 1.0);
    REQUIRE(std::holds_alternative<MaskedSample>(r));
    CHECK(std::get<MaskedSample>(r).masked_text == "[MASK] = [MASK]");
}

TEST_CASE("fill with the wrong token count is an error") {
    const auto m = std::get<MaskedSample>(treat("x = y", "identifier"));
    CHECK(masking::fill(m, {"while", "1"}) == "while = 1");
    CHECK_THROWS_AS((void)masking::fill(m, {"a"}), MaskingError);
}

TEST_CASE("masked sample JSON round trip") {
    const std::string src = "def f(a):\n    return a\n";
    const auto s = snip(src);
    const auto tree = ast::parse_python(src);
    auto t = std::get<MaskedSample>(masking::mask_treatment(s, tree, "identifier"));
    CHECK(masking::masked_sample_from_json(masking::to_json(t)) == t);
    const auto c = masking::mask_control(s, tree, t.mask_count, 3, 2, "<mask>", "identifier");
    CHECK(masking::masked_sample_from_json(masking::to_json(c[1])) == c[1]);
    auto bad = masking::to_json(t);
    bad["mask_count"] = 7;
    CHECK_THROWS_AS((void)masking::masked_sample_from_json(bad), FormatError);
}
