#pragma once

// Reader for the reference grammar's s-expressions:
//   (module 0-5 (expression_statement 0-5 (identifier 0-1) ("=" 2-3)))
// Quoted types are anonymous nodes; "MISSING" prefixes zero-width insertions.

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace testsupport {

struct SNode {
    std::string type;
    bool named = true;
    bool missing = false;
    std::uint32_t start = 0;
    std::uint32_t end = 0;
    std::vector<SNode> children;
};

class SexpReader {
public:
    explicit SexpReader(std::string_view s) : s_(s) {}

    SNode read() {
        SNode n = node();
        skip_ws();
        if (p_ != s_.size()) fail("trailing input");
        return n;
    }

private:
    std::string_view s_;
    std::size_t p_ = 0;

    [[noreturn]] void fail(const char* what) const {
        throw std::runtime_error(std::string("sexp: ") + what + " at " + std::to_string(p_));
    }
    void skip_ws() {
        while (p_ < s_.size() && s_[p_] == ' ') ++p_;
    }
    void expect(char c) {
        skip_ws();
        if (p_ >= s_.size() || s_[p_] != c) fail("unexpected character");
        ++p_;
    }
    std::string word() {
        skip_ws();
        const auto b = p_;
        while (p_ < s_.size() && s_[p_] != ' ' && s_[p_] != '(' && s_[p_] != ')') ++p_;
        return std::string(s_.substr(b, p_ - b));
    }
    std::string quoted() {
        expect('"');
        std::string out;
        while (p_ < s_.size() && s_[p_] != '"') {
            if (s_[p_] == '\\') ++p_;
            out.push_back(s_[p_++]);
        }
        expect('"');
        return out;
    }
    SNode node() {
        expect('(');
        SNode n;
        skip_ws();
        if (s_.substr(p_, 8) == "MISSING ") {
            n.missing = true;
            p_ += 8;
            skip_ws();
        }
        if (s_[p_] == '"') {
            n.type = quoted();
            n.named = false;
        } else {
            n.type = word();
        }
        const auto range = word();
        const auto dash = range.find('-');
        if (dash == std::string::npos) fail("missing range");
        n.start = static_cast<std::uint32_t>(std::stoul(range.substr(0, dash)));
        n.end = static_cast<std::uint32_t>(std::stoul(range.substr(dash + 1)));
        for (;;) {
            skip_ws();
            if (p_ >= s_.size()) fail("unterminated node");
            if (s_[p_] == ')') break;
            n.children.push_back(node());
        }
        ++p_;
        return n;
    }
};

inline SNode read_sexp(std::string_view s) { return SexpReader(s).read(); }

struct SexpCounts {
    std::int64_t nodes = 0;
    std::int64_t height = 0;
    std::int64_t leaves = 0;
    std::int64_t errors = 0;  // ERROR plus MISSING
};

inline void count(const SNode& n, std::int64_t depth, SexpCounts& c) {
    ++c.nodes;
    c.height = std::max(c.height, depth);
    if (n.children.empty()) ++c.leaves;
    if (n.type == "ERROR" || n.missing) ++c.errors;
    for (const auto& k : n.children) count(k, depth + 1, c);
}

inline SexpCounts count(const SNode& root) {
    SexpCounts c;
    count(root, 1, c);
    return c;
}

inline void named_labels(const SNode& n, std::vector<std::string>& out) {
    if (n.named) out.push_back(n.type);
    for (const auto& k : n.children) named_labels(k, out);
}

inline std::vector<std::string> named_labels(const SNode& root) {
    std::vector<std::string> out;
    named_labels(root, out);
    return out;
}

}  // namespace testsupport
