#include "syntaxeval/features.hpp"

#include "syntaxeval/python_grammar.hpp"
#include "syntaxeval/python_parser.hpp"

#include <algorithm>

namespace syntaxeval::features {

ConfounderVector extract_confounders(std::string_view source, const ast::Tree& tree) {
    ConfounderVector z;
    const auto decisions = grammar::decision_node_types();
    ast::walk(tree, [&](std::uint32_t i, std::uint32_t depth) {
        const ast::Node& n = tree.node(i);
        ++z.ast_nodes;
        z.ast_height = std::max<std::int64_t>(z.ast_height, depth);
        if (n.is_error() || n.missing) ++z.parse_errors;
        if (n.is_leaf()) ++z.token_count;
        if (std::find(decisions.begin(), decisions.end(), n.type) != decisions.end()) ++z.cyclo;
        return true;
    });
    ++z.cyclo;

    bool line_has_text = false;
    for (char c : source) {
        if (is_counted_whitespace(c)) ++z.whitespaces;
        if (c == '\n') {
            if (line_has_text) ++z.loc;
            line_has_text = false;
        } else if (!is_counted_whitespace(c)) {
            line_has_text = true;
        }
    }
    if (line_has_text) ++z.loc;
    return z;
}

ConfounderVector extract_confounders(std::string_view source) {
    return extract_confounders(source, ast::parse_python(source));
}

}  // namespace syntaxeval::features
