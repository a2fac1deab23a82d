#pragma once

// The seven code features used as confounders.

#include "syntaxeval/ast.hpp"

#include <array>
#include <cstdint>
#include <string_view>

namespace syntaxeval::features {

struct ConfounderVector {
    std::int64_t parse_errors = 0;
    std::int64_t ast_height = 0;
    std::int64_t ast_nodes = 0;
    std::int64_t whitespaces = 0;
    std::int64_t loc = 0;
    std::int64_t cyclo = 0;
    std::int64_t token_count = 0;

    static constexpr std::size_t size = 7;
    static constexpr std::array<std::string_view, size> names = {
        "parse_errors", "ast_height", "ast_nodes", "whitespaces", "loc", "cyclo", "token_count"};

    [[nodiscard]] std::array<std::int64_t, size> values() const {
        return {parse_errors, ast_height, ast_nodes, whitespaces, loc, cyclo, token_count};
    }
    friend bool operator==(const ConfounderVector&, const ConfounderVector&) = default;
};

// space, tab, CR, LF
[[nodiscard]] constexpr bool is_counted_whitespace(char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n';
}

[[nodiscard]] ConfounderVector extract_confounders(std::string_view source, const ast::Tree& tree);

// parse + extract
[[nodiscard]] ConfounderVector extract_confounders(std::string_view source);

}  // namespace syntaxeval::features
