#include "syntaxeval/metrics.hpp"
#include "syntaxeval/random.hpp"

#include "support/files.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

using namespace syntaxeval;
using testsupport::Labels;

namespace {

Labels random_labels(Rng& rng, std::size_t max_len, std::size_t alphabet) {
    Labels out(uniform_index(rng, max_len + 1));
    for (auto& s : out) s = "L" + std::to_string(uniform_index(rng, alphabet));
    return out;
}

}  // namespace

TEST_CASE("jaccard examples") {
    CHECK(metrics::jaccard(Labels{"id", "if"}, Labels{"id", "if"}) == 1.0);
    CHECK(metrics::jaccard(Labels{"a", "b"}, Labels{"b", "c"}) == doctest::Approx(1.0 / 3.0));
    CHECK(metrics::jaccard(Labels{}, Labels{}) == 1.0);
    CHECK(metrics::jaccard(Labels{"a"}, Labels{}) == 0.0);
    CHECK(metrics::jaccard(Labels{"a", "a", "b"}, Labels{"b", "a"}) == 1.0);  // sets
}

TEST_CASE("levenshtein examples") {
    CHECK(metrics::levenshtein_norm(Labels{"a", "b", "c"}, Labels{"a", "b", "c"}) == 1.0);
    CHECK(metrics::levenshtein_norm(Labels{"a", "b", "c"}, Labels{"a", "x", "c"}) == doctest::Approx(2.0 / 3.0));
    CHECK(metrics::levenshtein_norm(Labels{"a"}, Labels{}) == 0.0);
    CHECK(metrics::levenshtein_norm(Labels{}, Labels{}) == 1.0);
    CHECK(metrics::edit_distance(Labels{"k", "i", "t", "t", "e", "n"}, Labels{"s", "i", "t", "t", "i", "n", "g"}) == 3);
}

TEST_CASE("dice examples") {
    CHECK(metrics::sorensen_dice(Labels{"a", "b"}, Labels{"a", "b"}) == 1.0);
    CHECK(metrics::sorensen_dice(Labels{"a", "b"}, Labels{"b", "c"}) == 0.5);
    CHECK(metrics::sorensen_dice(Labels{"a"}, Labels{"b"}) == 0.0);
    CHECK(metrics::sorensen_dice(Labels{}, Labels{}) == 1.0);
    CHECK(metrics::sorensen_dice(Labels{}, Labels{"b"}) == 0.0);
}

TEST_CASE("edit distance matches the recursive definition on short sequences") {
    // lengths up to 4 here; the acceptance suite covers up to 6
    const auto seqs = testsupport::all_sequences({"a", "b", "c"}, 4);
    for (const auto& a : seqs)
        for (const auto& b : seqs) REQUIRE(metrics::edit_distance(a, b) == testsupport::recursive_levenshtein(a, b));
}

TEST_CASE("metrics agree with definitional oracles on random pairs") {
    Rng rng(2024);
    for (int i = 0; i < 1000; ++i) {
        const auto a = random_labels(rng, 30, 12), b = random_labels(rng, 30, 12);
        CHECK(metrics::jaccard(a, b) == testsupport::oracle_jaccard(a, b));
        CHECK(metrics::sorensen_dice(a, b) == testsupport::oracle_dice(a, b));
        CHECK(metrics::levenshtein_norm(a, b) == testsupport::oracle_levenshtein_similarity(a, b));
    }
}

TEST_CASE("symmetry, range and dice >= jaccard") {
    Rng rng(5);
    for (int i = 0; i < 2000; ++i) {
        const auto a = random_labels(rng, 12, 5), b = random_labels(rng, 12, 5);
        const auto ab = metrics::score_labels(a, b), ba = metrics::score_labels(b, a);
        CHECK(ab == ba);
        for (double v : {ab.jaccard, ab.levenshtein, ab.sorensen_dice}) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
        CHECK(ab.sorensen_dice >= ab.jaccard);
        CHECK(metrics::score_labels(a, a) == metrics::SimilarityScores{1.0, 1.0, 1.0});
    }
}

TEST_CASE("jaccard and dice order pairs the same way") {
    Rng rng(17);
    int strict = 0;
    for (int i = 0; i < 2000; ++i) {
        // b and c with the same number of distinct labels
        const std::size_t size = 1 + uniform_index(rng, 8);
        auto distinct = [&](std::size_t n) {
            Labels pool;
            for (int k = 0; k < 15; ++k) pool.push_back("L" + std::to_string(k));
            for (std::size_t k = 0; k < n; ++k) std::swap(pool[k], pool[k + uniform_index(rng, pool.size() - k)]);
            pool.resize(n);
            return pool;
        };
        const auto a = distinct(1 + uniform_index(rng, 8));
        const auto b = distinct(size), c = distinct(size);
        const bool j = metrics::jaccard(a, b) < metrics::jaccard(a, c);
        const bool d = metrics::sorensen_dice(a, b) < metrics::sorensen_dice(a, c);
        CHECK(j == d);
        strict += j;
    }
    CHECK(strict > 100);
}

TEST_CASE("source scoring") {
    CHECK(metrics::score_sample("x = y", "x = y") == metrics::SimilarityScores{1.0, 1.0, 1.0});
    const auto s = metrics::score_sample("x = y", "while = y");
    CHECK(s.levenshtein < 1.0);
    const auto labels = metrics::label_views("x = y");
    CHECK(labels.size() == 5);  // module expression_statement assignment identifier identifier
    for (const auto& j : testsupport::read_jsonl(testsupport::test_path("data/snippets.jsonl"))) {
        const std::string src = j.at("source");
        CHECK(metrics::score_sample(src, src) == metrics::SimilarityScores{1.0, 1.0, 1.0});
    }
}
