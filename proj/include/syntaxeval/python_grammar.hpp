#pragma once

// Node-type inventory of the tree-sitter Python grammar (v0.21 series) and the
// fixed label lists the harness relies on.

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace syntaxeval::grammar {

// Named node types, sorted.
[[nodiscard]] std::span<const std::string_view> named_node_types();

// Anonymous (keyword and punctuation) node types, sorted.
[[nodiscard]] std::span<const std::string_view> anonymous_node_types();

// True for any label the grammar can put in a tree, including "ERROR".
[[nodiscard]] bool is_node_type(std::string_view label);

// The eleven node types studied by default.
[[nodiscard]] std::vector<std::string> default_study_node_types();

// Node types counted as decision points by the cyclomatic-complexity feature.
[[nodiscard]] std::span<const std::string_view> decision_node_types();

}  // namespace syntaxeval::grammar
