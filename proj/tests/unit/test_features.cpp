#include "syntaxeval/features.hpp"
#include "syntaxeval/python_parser.hpp"

#include "support/files.hpp"
#include "support/sexp.hpp"

#include <doctest.h>

using namespace syntaxeval;
using features::extract_confounders;

TEST_CASE("hand-counted confounder fixture") {
    const auto fixture = testsupport::read_json(testsupport::test_path("fixtures/confounders.json"));
    REQUIRE(fixture.size() == 10);
    for (const auto& row : fixture) {
        const std::string src = row.at("source");
        INFO(src);
        const auto z = extract_confounders(src);
        CHECK(z.whitespaces == row.at("whitespaces").get<std::int64_t>());
        CHECK(z.loc == row.at("loc").get<std::int64_t>());
        CHECK(z.cyclo == row.at("cyclo").get<std::int64_t>());
        CHECK(z.parse_errors == row.at("parse_errors").get<std::int64_t>());
    }
}

TEST_CASE("tree-shaped confounders agree with reference trees") {
    std::size_t n = 0;
    for (const auto& j : testsupport::read_jsonl(testsupport::test_path("fixtures/parser_reference.jsonl"))) {
        const auto ref = testsupport::count(testsupport::read_sexp(j.at("sexp").get<std::string>()));
        if (ref.errors > 0) continue;
        const std::string src = j.at("source");
        INFO(src);
        const auto z = extract_confounders(src);
        CHECK(z.ast_nodes == ref.nodes);
        CHECK(z.ast_height == ref.height);
        CHECK(z.token_count == ref.leaves);
        CHECK(z.parse_errors == 0);
        ++n;
    }
    CHECK(n >= 300);
}

TEST_CASE("empty source") {
    const auto z = extract_confounders("");
    CHECK(z.parse_errors == 0);
    CHECK(z.ast_height == 1);
    CHECK(z.ast_nodes == 1);
    CHECK(z.whitespaces == 0);
    CHECK(z.loc == 0);
    CHECK(z.cyclo == 1);
    CHECK(z.token_count == 1);  // the bare module node is a leaf
}

TEST_CASE("worked examples") {
    const auto a = extract_confounders("def f(x):\n    return x");
    CHECK(a.whitespaces == 7);
    CHECK(a.loc == 2);
    CHECK(a.cyclo == 1);
    CHECK(extract_confounders("if a:\n    b()\nelse:\n    c()").cyclo == 2);
}

TEST_CASE("broken code counts parse errors") {
    CHECK(extract_confounders("def f(:\n  return\n").parse_errors > 0);
    CHECK(extract_confounders("print((1, 2)\n").parse_errors > 0);
}

TEST_CASE("whitespace plus other bytes is the length") {
    for (const auto& j : testsupport::read_jsonl(testsupport::test_path("data/snippets.jsonl"))) {
        const std::string src = j.at("source");
        std::int64_t other = 0;
        for (char c : src) other += !features::is_counted_whitespace(c);
        CHECK(extract_confounders(src).whitespaces + other == static_cast<std::int64_t>(src.size()));
    }
}

TEST_CASE("extraction is pure") {
    const std::string src = "for i in x:\n    while y and z:\n        pass\n";
    const auto tree = ast::parse_python(src);
    CHECK(extract_confounders(src) == extract_confounders(src, tree));
    CHECK(extract_confounders(src) == extract_confounders(src));
}
