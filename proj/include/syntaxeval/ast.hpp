#pragma once

// Concrete syntax trees for Python source, with the node-type labels of the
// tree-sitter Python grammar.

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace syntaxeval::ast {

struct ByteRange {
    std::uint32_t start = 0;
    std::uint32_t end = 0;

    [[nodiscard]] std::uint32_t size() const { return end - start; }
    friend auto operator<=>(const ByteRange&, const ByteRange&) = default;
};

struct Node {
    std::string_view type;  // points into static grammar tables
    ByteRange range;
    bool named = false;
    bool missing = false;
    std::vector<std::uint32_t> children;

    [[nodiscard]] bool is_error() const { return type == "ERROR"; }
    [[nodiscard]] bool is_leaf() const { return children.empty(); }
};

// A parsed tree. Owns a copy of the source so spans can always be resolved.
class Tree {
public:
    Tree() = default;
    Tree(std::string source, std::vector<Node> nodes, std::uint32_t root);

    [[nodiscard]] const Node& root() const { return nodes_[root_]; }
    [[nodiscard]] std::uint32_t root_index() const { return root_; }
    [[nodiscard]] const Node& node(std::uint32_t index) const { return nodes_[index]; }
    [[nodiscard]] std::span<const Node> nodes() const { return nodes_; }
    [[nodiscard]] std::size_t size() const { return nodes_.size(); }
    [[nodiscard]] const std::string& source() const { return source_; }
    [[nodiscard]] std::string_view text(const Node& n) const;

    // S-expression with anonymous nodes and byte ranges, e.g.
    // (module 0-5 (expression_statement 0-5 ...)). Anonymous types are JSON-quoted.
    [[nodiscard]] std::string to_sexp() const;

    // Same as to_sexp but named nodes only, without ranges.
    [[nodiscard]] std::string to_named_sexp() const;

private:
    std::string source_;
    std::vector<Node> nodes_;
    std::uint32_t root_ = 0;
};

// Pre-order walk; the visitor is called with (node index, depth) and
// returns false to skip the node's subtree.
template <typename Visitor>
void walk(const Tree& tree, Visitor&& visit) {
    struct Frame {
        std::uint32_t index;
        std::uint32_t depth;
    };
    std::vector<Frame> stack{{tree.root_index(), 1}};
    while (!stack.empty()) {
        const Frame f = stack.back();
        stack.pop_back();
        if (!visit(f.index, f.depth)) continue;
        const auto& kids = tree.node(f.index).children;
        for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.push_back({*it, f.depth + 1});
    }
}

// Pre-order visit of the subtree rooted at `index`, the root included.
template <typename Visitor>
void walk_subtree(const Tree& tree, std::uint32_t index, Visitor&& visit) {
    std::vector<std::uint32_t> stack{index};
    while (!stack.empty()) {
        const std::uint32_t i = stack.back();
        stack.pop_back();
        visit(i);
        const auto& kids = tree.node(i).children;
        for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.push_back(*it);
    }
}

struct NodeSpan {
    std::string node_type;
    ByteRange range;
    std::vector<ByteRange> leaf_token_spans;
};

// Leaf tokens of the whole tree that cover at least one byte, in document order.
// Zero-width leaves (MISSING tokens, an empty root) are not maskable.
[[nodiscard]] std::vector<ByteRange> leaf_tokens(const Tree& tree);

// Every node labelled `node_type`, in document order, with the leaf tokens it covers.
[[nodiscard]] std::vector<NodeSpan> find_node_spans(const Tree& tree, std::string_view node_type);

// Labels of named nodes in left-to-right depth-first (pre-order) order.
[[nodiscard]] std::vector<std::string> traversal_labels(const Tree& tree);

}  // namespace syntaxeval::ast
