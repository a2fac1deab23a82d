#include "syntaxeval/ast.hpp"

#include <fmt/format.h>

namespace syntaxeval::ast {

namespace {

std::string quoted(std::string_view s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

void sexp(const Tree& tree, std::uint32_t index, bool ranges, bool named_only, std::string& out) {
    const Node& n = tree.node(index);
    out += '(';
    if (n.missing) out += "MISSING ";
    out += n.named ? std::string(n.type) : quoted(n.type);
    if (ranges) out += fmt::format(" {}-{}", n.range.start, n.range.end);
    for (auto c : n.children) {
        if (named_only && !tree.node(c).named) continue;
        out += ' ';
        sexp(tree, c, ranges, named_only, out);
    }
    out += ')';
}

}  // namespace

Tree::Tree(std::string source, std::vector<Node> nodes, std::uint32_t root)
    : source_(std::move(source)), nodes_(std::move(nodes)), root_(root) {}

std::string_view Tree::text(const Node& n) const {
    return std::string_view(source_).substr(n.range.start, n.range.size());
}

std::string Tree::to_sexp() const {
    std::string out;
    if (!nodes_.empty()) sexp(*this, root_, true, false, out);
    return out;
}

std::string Tree::to_named_sexp() const {
    std::string out;
    if (!nodes_.empty()) sexp(*this, root_, false, true, out);
    return out;
}

std::vector<ByteRange> leaf_tokens(const Tree& tree) {
    std::vector<ByteRange> out;
    walk(tree, [&](std::uint32_t i, std::uint32_t) {
        const Node& n = tree.node(i);
        if (n.is_leaf() && n.range.size() > 0) out.push_back(n.range);
        return true;
    });
    return out;
}

std::vector<NodeSpan> find_node_spans(const Tree& tree, std::string_view node_type) {
    std::vector<NodeSpan> out;
    walk(tree, [&](std::uint32_t i, std::uint32_t) {
        const Node& n = tree.node(i);
        if (n.type != node_type) return true;
        NodeSpan span{std::string(node_type), n.range, {}};
        walk_subtree(tree, i, [&](std::uint32_t j) {
            const Node& m = tree.node(j);
            if (m.is_leaf() && m.range.size() > 0) span.leaf_token_spans.push_back(m.range);
        });
        out.push_back(std::move(span));
        return true;
    });
    return out;
}

std::vector<std::string> traversal_labels(const Tree& tree) {
    std::vector<std::string> out;
    walk(tree, [&](std::uint32_t i, std::uint32_t) {
        const Node& n = tree.node(i);
        if (n.named) out.emplace_back(n.type);
        return true;
    });
    return out;
}

}  // namespace syntaxeval::ast
