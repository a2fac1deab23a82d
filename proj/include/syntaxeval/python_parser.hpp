#pragma once

#include "syntaxeval/ast.hpp"

#include <string_view>

namespace syntaxeval::ast {

// Parse Python source into a concrete syntax tree labelled like tree-sitter-python.
// Never fails: unparseable stretches become ERROR nodes, and a few common
// omissions (a closing parenthesis, say) become zero-width MISSING nodes.
[[nodiscard]] Tree parse_python(std::string_view source);

}  // namespace syntaxeval::ast
