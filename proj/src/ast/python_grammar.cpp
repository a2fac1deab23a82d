#include "syntaxeval/python_grammar.hpp"

#include <algorithm>
#include <array>

namespace syntaxeval::grammar {

namespace {

constexpr std::array<std::string_view, 124> kNamed = {
    "aliased_import", "argument_list", "as_pattern", "as_pattern_target", "assert_statement",
    "assignment", "attribute", "augmented_assignment", "await", "binary_operator", "block",
    "boolean_operator", "break_statement", "call", "case_clause", "case_pattern", "chevron",
    "class_definition", "class_pattern", "comment", "comparison_operator", "complex_pattern",
    "concatenated_string", "conditional_expression", "constrained_type", "continue_statement",
    "decorated_definition", "decorator", "default_parameter", "delete_statement", "dict_pattern",
    "dictionary", "dictionary_comprehension", "dictionary_splat", "dictionary_splat_pattern",
    "dotted_name", "elif_clause", "ellipsis", "else_clause", "escape_interpolation",
    "escape_sequence", "except_clause", "except_group_clause", "exec_statement",
    "expression_list", "expression_statement", "false", "finally_clause", "float",
    "for_in_clause", "for_statement", "format_expression", "format_specifier",
    "function_definition", "future_import_statement", "generator_expression", "generic_type",
    "global_statement", "identifier", "if_clause", "if_statement", "import_from_statement",
    "import_prefix", "import_statement", "integer", "interpolation", "keyword_argument",
    "keyword_pattern", "keyword_separator", "lambda", "lambda_parameters", "line_continuation",
    "list", "list_comprehension", "list_pattern", "list_splat", "list_splat_pattern",
    "match_statement", "member_type", "module", "named_expression", "none",
    "nonlocal_statement", "not_operator", "pair", "parameters", "parenthesized_expression",
    "parenthesized_list_splat", "pass_statement", "pattern_list", "positional_separator",
    "print_statement", "raise_statement", "relative_import", "return_statement", "set",
    "set_comprehension", "slice", "splat_pattern", "splat_type", "string", "string_content",
    "string_end", "string_start", "subscript", "true", "try_statement", "tuple",
    "tuple_pattern", "type", "type_alias_statement", "type_conversion", "type_parameter",
    "typed_default_parameter", "typed_parameter", "unary_operator", "union_pattern",
    "union_type", "while_statement", "wildcard_import", "with_clause", "with_item",
    "with_statement", "yield",
};

constexpr std::array<std::string_view, 90> kAnonymous = {
    "!=", "%", "%=", "&", "&=", "(", ")", "*", "**", "**=", "*=", "+", "+=", ",", "-", "-=",
    "->", ".", "/", "//", "//=", "/=", ":", ":=", ";", "<", "<<", "<<=", "<=", "<>", "=", "==",
    ">", ">=", ">>", ">>=", "@", "@=", "[", "\\", "]", "^", "^=", "_", "__future__", "and",
    "as", "assert", "async", "await", "break", "case", "class", "continue", "def", "del",
    "elif", "else", "except", "except*", "exec", "finally", "for", "from", "global", "if",
    "import", "in", "is", "is not", "lambda", "match", "nonlocal", "not", "not in", "or",
    "pass", "print", "raise", "return", "try", "type", "while", "with", "yield", "{", "|",
    "|=", "}", "~",
};

constexpr std::array<std::string_view, 9> kDecision = {
    "if_statement",   "elif_clause",   "conditional_expression",
    "for_statement",  "while_statement", "except_clause",
    "case_clause",    "boolean_operator", "assert_statement",
};

}  // namespace

std::span<const std::string_view> named_node_types() { return kNamed; }

std::span<const std::string_view> anonymous_node_types() { return kAnonymous; }

bool is_node_type(std::string_view label) {
    if (label == "ERROR") return true;
    return std::binary_search(kNamed.begin(), kNamed.end(), label) ||
           std::find(kAnonymous.begin(), kAnonymous.end(), label) != kAnonymous.end();
}

std::vector<std::string> default_study_node_types() {
    return {"boolean_operator", "comparison_operator", "for_in_clause", "for_statement",
            "identifier",       "if_clause",           "if_statement",  "parameters",
            "return_statement", "string",              "while_statement"};
}

std::span<const std::string_view> decision_node_types() { return kDecision; }

}  // namespace syntaxeval::grammar
