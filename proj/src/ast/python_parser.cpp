#include "syntaxeval/python_parser.hpp"

#include "python_lexer.hpp"
#include "syntaxeval/python_grammar.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <optional>

namespace syntaxeval::ast {

namespace {

using detail::Layout;
using detail::PieceKind;
using detail::StringDelimiter;
using detail::Token;
using detail::TokenKind;
using detail::TokenStream;

struct ParseError {};

enum class RawKind : std::uint8_t { Named, Anonymous, Hidden, Extra };

struct RawNode {
    std::string_view type;
    RawKind kind = RawKind::Named;
    bool leaf = false;
    bool missing = false;
    ByteRange range;
    std::uint32_t seq = 0;
    std::vector<std::uint32_t> children;
};

constexpr int kMaxDepth = 400;
constexpr std::uint32_t kNoSeq = std::numeric_limits<std::uint32_t>::max();

std::string_view intern(std::string_view text) {
    for (auto t : grammar::anonymous_node_types()) {
        if (t == text) return t;
    }
    return {};
}

constexpr std::array<std::string_view, 30> kHardKeywords = {
    "False", "None",  "True",  "and",    "as",     "assert", "break",    "class",
    "continue", "def", "del",  "elif",   "else",   "except", "finally",  "for",
    "from",  "global", "if",   "import", "in",     "is",     "lambda",   "nonlocal",
    "not",   "or",    "pass",  "raise",  "return", "try",
};

bool is_hard_keyword(std::string_view w) {
    return std::find(kHardKeywords.begin(), kHardKeywords.end(), w) != kHardKeywords.end() ||
           w == "while" || w == "with" || w == "yield";
}

// Keywords that end an optional operand list rather than start an operand.
bool is_stop_keyword(std::string_view w) {
    static constexpr std::array<std::string_view, 26> kStop = {
        "if",   "else",  "elif",   "for",     "in",     "is",      "and",    "or",    "as",
        "from", "import", "while", "with",    "def",    "class",   "try",    "except",
        "finally", "return", "pass", "break", "continue", "raise", "del",    "global",
        "nonlocal",
    };
    return std::find(kStop.begin(), kStop.end(), w) != kStop.end() || w == "assert";
}

int binary_precedence(const Token& t) {
    if (t.kind != TokenKind::Operator) return 0;
    const std::string_view s = t.text;
    if (s == "|") return 14;
    if (s == "&") return 15;
    if (s == "^") return 16;
    if (s == "<<" || s == ">>") return 17;
    if (s == "+" || s == "-") return 18;
    if (s == "*" || s == "@" || s == "/" || s == "%" || s == "//") return 19;
    if (s == "**") return 21;
    return 0;
}

bool is_comparison(const Token& t) {
    if (t.kind == TokenKind::Name) return t.text == "in" || t.text == "not" || t.text == "is";
    if (t.kind != TokenKind::Operator) return false;
    const std::string_view s = t.text;
    return s == "<" || s == ">" || s == "==" || s == ">=" || s == "<=" || s == "!=" || s == "<>";
}

bool is_augmented(const Token& t) {
    if (t.kind != TokenKind::Operator) return false;
    static constexpr std::array<std::string_view, 13> kOps = {
        "+=", "-=", "*=", "/=", "@=", "//=", "%=", "**=", ">>=", "<<=", "&=", "^=", "|=",
    };
    return std::find(kOps.begin(), kOps.end(), t.text) != kOps.end();
}

class Parser {
public:
    explicit Parser(std::string_view source) : ts_(source), src_(source) {}

    Tree run();

private:
    struct Saved {
        TokenStream::Snapshot ts;
        std::size_t raw;
    };

    struct DepthGuard {
        int& d;
        explicit DepthGuard(int& depth) : d(depth) {
            if (++d > kMaxDepth) {
                --d;
                throw ParseError{};
            }
        }
        ~DepthGuard() { --d; }
        DepthGuard(const DepthGuard&) = delete;
        DepthGuard& operator=(const DepthGuard&) = delete;
    };

    struct BracketGuard {
        int& b;
        explicit BracketGuard(int& brackets) : b(brackets) { ++b; }
        ~BracketGuard() { --b; }
        BracketGuard(const BracketGuard&) = delete;
        BracketGuard& operator=(const BracketGuard&) = delete;
    };

    // ---- token plumbing -------------------------------------------------

    Saved save() const { return {ts_.snapshot(), raw_.size()}; }
    void restore(const Saved& s) {
        ts_.restore(s.ts);
        raw_.resize(s.raw);
    }

    template <typename F>
    bool attempt(F&& f) {
        const Saved s = save();
        try {
            f();
            return true;
        } catch (const ParseError&) {
            restore(s);
            return false;
        }
    }

    Layout operand_layout() const {
        Layout l;
        l.operand = true;
        l.in_brackets = brackets_ > 0;
        return l;
    }
    Layout operator_layout() const {
        Layout l;
        l.newline = brackets_ == 0;
        l.in_brackets = brackets_ > 0;
        return l;
    }
    static Layout statement_layout(bool in_block) {
        Layout l;
        l.dedent = in_block;
        l.operand = true;
        return l;
    }

    Token peek(const Layout& l) {
        cur_ = ts_.peek(l);
        return cur_;
    }
    Token peek_operand() { return peek(operand_layout()); }
    Token peek_op() { return peek(operator_layout()); }
    // Where an operand may follow but the line may also end.
    Token peek_maybe_operand() {
        Layout l = operator_layout();
        l.operand = true;
        return peek(l);
    }

    std::uint32_t push(RawNode n) {
        raw_.push_back(std::move(n));
        return static_cast<std::uint32_t>(raw_.size() - 1);
    }
    std::uint32_t push_leaf(std::string_view type, RawKind kind, ByteRange range, std::uint32_t seq) {
        RawNode n;
        n.type = type;
        n.kind = kind;
        n.leaf = true;
        n.range = range;
        n.seq = seq;
        return push(std::move(n));
    }
    std::uint32_t leaf(std::string_view type, RawKind kind = RawKind::Named) {
        const std::uint32_t seq = ts_.consume();
        return push_leaf(type, kind, cur_.range, seq);
    }
    std::uint32_t hidden() { return leaf({}, RawKind::Hidden); }
    std::uint32_t anon() {
        const std::string_view type = intern(cur_.text);
        if (type.empty()) throw ParseError{};
        return leaf(type, RawKind::Anonymous);
    }
    std::uint32_t missing(std::string_view type, RawKind kind, std::uint32_t at) {
        const std::uint32_t i = push_leaf(type, kind, {at, at}, ts_.next_seq());
        raw_[i].missing = true;
        return i;
    }
    std::uint32_t node(std::string_view type, std::vector<std::uint32_t> kids,
                       RawKind kind = RawKind::Named) {
        RawNode n;
        n.type = type;
        n.kind = kind;
        n.children = std::move(kids);
        return push(std::move(n));
    }
    std::uint32_t expect(const Layout& l, std::string_view op) {
        const Token t = peek(l);
        if (!t.is(op)) throw ParseError{};
        return anon();
    }
    std::uint32_t expect_op(std::string_view op) { return expect(operator_layout(), op); }
    std::uint32_t expect_operand_kw(std::string_view kw) { return expect(operand_layout(), kw); }

    std::uint32_t identifier() {
        const Token t = peek_operand();
        if (t.kind != TokenKind::Name) throw ParseError{};
        return leaf("identifier");
    }

    bool is_type(std::uint32_t i, std::string_view type) const { return raw_[i].type == type; }

    // The word that follows position `at` on the same line, skipping blanks.
    std::string_view word_after(std::uint32_t at) const {
        while (at < src_.size() && (src_[at] == ' ' || src_[at] == '\t')) ++at;
        std::uint32_t end = at;
        while (end < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[end])) || src_[end] == '_')) {
            ++end;
        }
        return src_.substr(at, end - at);
    }
    char char_after(std::uint32_t at) const {
        while (at < src_.size() && (src_[at] == ' ' || src_[at] == '\t')) ++at;
        return at < src_.size() ? src_[at] : '\0';
    }

    bool starts_operand(const Token& t) const {
        switch (t.kind) {
            case TokenKind::Name: return !is_stop_keyword(t.text);
            case TokenKind::Integer:
            case TokenKind::Float:
            case TokenKind::StringStart: return true;
            case TokenKind::Operator:
                return t.text == "(" || t.text == "[" || t.text == "{" || t.text == "-" ||
                       t.text == "+" || t.text == "~" || t.text == "*" || t.text == "...";
            default: return false;
        }
    }

    // ---- statements -----------------------------------------------------

    void statement_with_recovery(std::vector<std::uint32_t>& kids, bool in_block);
    void statement(std::vector<std::uint32_t>& kids, bool in_block);
    void recover(std::vector<std::uint32_t>& kids, bool in_block);
    void simple_statements(std::vector<std::uint32_t>& kids);
    std::uint32_t simple_statement();
    std::uint32_t expression_statement();
    std::uint32_t assignment_rest(std::uint32_t left);
    std::uint32_t right_hand_side();
    std::uint32_t left_hand_side(std::vector<std::uint32_t> items, bool comma);
    std::uint32_t to_pattern(std::uint32_t i);
    void suite(std::vector<std::uint32_t>& kids);
    std::uint32_t block_body();
    std::uint32_t if_statement(bool in_block);
    std::uint32_t for_statement(bool in_block);
    std::uint32_t while_statement(bool in_block);
    std::uint32_t try_statement(bool in_block);
    std::uint32_t with_statement(bool in_block);
    std::uint32_t function_definition();
    std::uint32_t class_definition();
    std::uint32_t decorated_definition(bool in_block);
    std::uint32_t match_statement(bool in_block);
    std::uint32_t case_clause(bool in_block);
    std::optional<std::uint32_t> else_clause(bool in_block);
    std::uint32_t with_clause();
    std::uint32_t import_statement();
    std::uint32_t import_from_statement();
    std::uint32_t dotted_name();
    std::uint32_t print_statement();
    std::uint32_t exec_statement();
    std::uint32_t type_alias_statement();

    // ---- expressions ----------------------------------------------------

    std::uint32_t expression(bool allow_as = false, bool allow_conditional = true);
    std::uint32_t or_test();
    std::uint32_t and_test();
    std::uint32_t not_test();
    std::uint32_t comparison();
    std::uint32_t binary(int min_prec);
    std::uint32_t unary();
    std::uint32_t postfix(std::uint32_t e);
    std::uint32_t atom();
    std::uint32_t expressions();
    std::uint32_t star_or_expression();
    std::uint32_t yield_expression();
    std::uint32_t lambda_expression();
    std::uint32_t parenthesized();
    std::uint32_t list_display();
    std::uint32_t brace_display();
    void comprehension_clauses(std::vector<std::uint32_t>& kids);
    std::uint32_t for_in_clause();
    std::uint32_t targets(bool wrap_list);
    std::uint32_t target();
    std::uint32_t arguments();
    std::uint32_t subscript(std::uint32_t e);
    std::uint32_t slice_or_expression();
    std::uint32_t strings();
    std::uint32_t string();
    std::uint32_t interpolation(std::string_view type);
    std::vector<std::uint32_t> parameter_list(bool lambda);
    std::uint32_t parameter(bool lambda);
    std::uint32_t parameters();
    std::uint32_t type_expression();
    std::uint32_t type_parameter();

    // ---- patterns for match/case ---------------------------------------

    std::uint32_t case_pattern();
    std::vector<std::uint32_t> simple_pattern();
    std::vector<std::uint32_t> simple_pattern_atom();

    Tree finish(std::uint32_t root);

    TokenStream ts_;
    std::string_view src_;
    std::vector<RawNode> raw_;
    Token cur_;
    int brackets_ = 0;
    int depth_ = 0;
};

// ===========================================================================
// Statements

Tree Parser::run() {
    std::vector<std::uint32_t> kids;
    for (;;) {
        const Token t = peek(statement_layout(false));
        if (t.kind == TokenKind::EndOfFile) {
            ts_.consume();  // commits trailing comments
            break;
        }
        if (t.is_layout()) {
            kids.push_back(hidden());
            continue;
        }
        statement_with_recovery(kids, false);
    }
    return finish(node("module", std::move(kids)));
}

void Parser::statement_with_recovery(std::vector<std::uint32_t>& kids, bool in_block) {
    const Saved s = save();
    std::vector<std::uint32_t> local;
    try {
        statement(local, in_block);
    } catch (const ParseError&) {
        restore(s);
        local.clear();
        recover(local, in_block);
    }
    kids.insert(kids.end(), local.begin(), local.end());
}

void Parser::recover(std::vector<std::uint32_t>& kids, bool in_block) {
    std::vector<std::uint32_t> err;
    int depth = 0;
    for (;;) {
        Layout l;
        l.newline = depth == 0 && !err.empty();
        l.dedent = in_block && depth == 0 && !err.empty();
        l.in_brackets = depth > 0;
        l.operand = true;
        const Token t = peek(l);
        if (t.kind == TokenKind::EndOfFile) break;
        if (t.kind == TokenKind::Newline) {
            err.push_back(hidden());
            break;
        }
        if (t.kind == TokenKind::Dedent) {
            if (err.empty()) err.push_back(hidden());
            break;
        }
        if (t.kind == TokenKind::Indent) {
            err.push_back(hidden());
            continue;
        }
        switch (t.kind) {
            case TokenKind::Name:
                if (t.text == "True") {
                    err.push_back(leaf("true"));
                } else if (t.text == "False") {
                    err.push_back(leaf("false"));
                } else if (t.text == "None") {
                    err.push_back(leaf("none"));
                } else if (is_hard_keyword(t.text) && !intern(t.text).empty()) {
                    err.push_back(anon());
                } else {
                    err.push_back(leaf("identifier"));
                }
                break;
            case TokenKind::Integer: err.push_back(leaf("integer")); break;
            case TokenKind::Float: err.push_back(leaf("float")); break;
            case TokenKind::StringStart: {
                std::uint32_t s = 0;
                if (!attempt([&] { s = string(); })) {
                    peek(l);
                    s = leaf("string_start");
                }
                err.push_back(s);
                break;
            }
            case TokenKind::Operator:
                if (t.text == "(" || t.text == "[" || t.text == "{") ++depth;
                if ((t.text == ")" || t.text == "]" || t.text == "}") && depth > 0) --depth;
                if (t.text == "...") {
                    err.push_back(leaf("ellipsis"));
                } else if (!intern(t.text).empty()) {
                    err.push_back(anon());
                } else {
                    err.push_back(leaf("ERROR"));
                }
                break;
            default: err.push_back(leaf("ERROR")); break;
        }
    }
    if (err.empty()) return;
    kids.push_back(node("ERROR", std::move(err)));
}

void Parser::statement(std::vector<std::uint32_t>& kids, bool in_block) {
    DepthGuard guard(depth_);
    const Token t = peek(statement_layout(in_block));
    if (t.kind == TokenKind::Name) {
        const std::string_view w = t.text;
        if (w == "if") return kids.push_back(if_statement(in_block));
        if (w == "for") return kids.push_back(for_statement(in_block));
        if (w == "while") return kids.push_back(while_statement(in_block));
        if (w == "try") return kids.push_back(try_statement(in_block));
        if (w == "with") return kids.push_back(with_statement(in_block));
        if (w == "def") return kids.push_back(function_definition());
        if (w == "class") return kids.push_back(class_definition());
        if (w == "async") {
            const std::string_view next = word_after(t.range.end);
            if (next == "def") return kids.push_back(function_definition());
            if (next == "for") return kids.push_back(for_statement(in_block));
            if (next == "with") return kids.push_back(with_statement(in_block));
        }
        if (w == "match") {
            std::uint32_t m = 0;
            if (attempt([&] { m = match_statement(in_block); })) return kids.push_back(m);
        }
    } else if (t.is("@")) {
        return kids.push_back(decorated_definition(in_block));
    }
    simple_statements(kids);
}

void Parser::simple_statements(std::vector<std::uint32_t>& kids) {
    for (;;) {
        kids.push_back(simple_statement());
        Layout nl;
        nl.newline = true;
        Token t = peek(nl);
        if (t.is(";")) {
            kids.push_back(anon());
            nl.operand = true;
            t = peek(nl);
            if (t.kind == TokenKind::Newline) {
                kids.push_back(hidden());
                return;
            }
            continue;
        }
        if (t.kind == TokenKind::Newline) {
            kids.push_back(hidden());
            return;
        }
        throw ParseError{};
    }
}

std::uint32_t Parser::simple_statement() {
    const Token t = peek_operand();
    if (t.kind != TokenKind::Name) return expression_statement();
    const std::string_view w = t.text;
    auto keyword_only = [&](std::string_view type) { return node(type, {anon()}); };
    if (w == "pass") return keyword_only("pass_statement");
    if (w == "break") return keyword_only("break_statement");
    if (w == "continue") return keyword_only("continue_statement");
    if (w == "import") return import_statement();
    if (w == "from") return import_from_statement();
    if (w == "assert") {
        std::vector<std::uint32_t> kids{anon(), expression()};
        if (peek_op().is(",")) {
            kids.push_back(anon());
            kids.push_back(expression());
        }
        return node("assert_statement", std::move(kids));
    }
    if (w == "return") {
        std::vector<std::uint32_t> kids{anon()};
        if (starts_operand(peek_maybe_operand())) kids.push_back(expressions());
        return node("return_statement", std::move(kids));
    }
    if (w == "del") {
        std::vector<std::uint32_t> kids{anon()};
        kids.push_back(expressions());
        return node("delete_statement", std::move(kids));
    }
    if (w == "raise") {
        std::vector<std::uint32_t> kids{anon()};
        if (starts_operand(peek_maybe_operand())) kids.push_back(expressions());
        if (peek_op().is("from")) {
            kids.push_back(anon());
            kids.push_back(expression());
        }
        return node("raise_statement", std::move(kids));
    }
    if (w == "global" || w == "nonlocal") {
        std::vector<std::uint32_t> kids{anon(), identifier()};
        while (peek_op().is(",")) {
            kids.push_back(anon());
            kids.push_back(identifier());
        }
        return node(w == "global" ? "global_statement" : "nonlocal_statement", std::move(kids));
    }

    auto ends_statement = [&] {
        Layout nl;
        nl.newline = true;
        const Token n = peek(nl);
        return n.kind == TokenKind::Newline || n.is(";") || n.kind == TokenKind::EndOfFile;
    };
    if (w == "print") {
        const std::uint32_t after = t.range.end;
        const bool chevron = src_.substr(after).find_first_not_of(" \t") != std::string_view::npos &&
                             src_.substr(after + (src_.substr(after).find_first_not_of(" \t")), 3) != ">>=" &&
                             src_.substr(after + (src_.substr(after).find_first_not_of(" \t")), 2) == ">>";
        if (!chevron) {
            std::uint32_t e = 0;
            if (attempt([&] {
                    e = expression_statement();
                    if (!ends_statement()) throw ParseError{};
                })) {
                return e;
            }
        }
        return print_statement();
    }
    if (w == "exec") {
        std::uint32_t e = 0;
        if (attempt([&] {
                e = expression_statement();
                if (!ends_statement()) throw ParseError{};
            })) {
            return e;
        }
        return exec_statement();
    }
    if (w == "type") {
        std::uint32_t e = 0;
        if (attempt([&] {
                e = type_alias_statement();
                if (!ends_statement()) throw ParseError{};
            })) {
            return e;
        }
    }
    return expression_statement();
}

std::uint32_t Parser::expression_statement() {
    Token t = peek_operand();
    std::vector<std::uint32_t> items;
    bool comma = false;
    items.push_back(t.is("yield") ? yield_expression() : expression());
    while (peek_op().is(",")) {
        comma = true;
        items.push_back(anon());
        if (!starts_operand(peek_maybe_operand())) break;
        items.push_back(expression());
    }
    t = peek_op();
    if (t.is("=")) return node("expression_statement", {assignment_rest(left_hand_side(std::move(items), comma))});
    if (t.is(":") && !comma) {
        std::vector<std::uint32_t> kids{to_pattern(items[0]), anon(), type_expression()};
        if (peek_op().is("=")) {
            kids.push_back(anon());
            kids.push_back(right_hand_side());
        }
        return node("expression_statement", {node("assignment", std::move(kids))});
    }
    if (is_augmented(t)) {
        std::vector<std::uint32_t> kids{left_hand_side(std::move(items), comma), anon(), right_hand_side()};
        return node("expression_statement", {node("augmented_assignment", std::move(kids))});
    }
    return node("expression_statement", std::move(items));
}

std::uint32_t Parser::assignment_rest(std::uint32_t left) {
    std::vector<std::uint32_t> kids{left, anon()};
    kids.push_back(right_hand_side());
    return node("assignment", std::move(kids));
}

std::uint32_t Parser::right_hand_side() {
    Token t = peek_operand();
    if (t.is("yield")) return yield_expression();
    std::vector<std::uint32_t> items;
    bool comma = false;
    items.push_back(star_or_expression());
    while (peek_op().is(",")) {
        comma = true;
        items.push_back(anon());
        if (!starts_operand(peek_maybe_operand())) break;
        items.push_back(star_or_expression());
    }
    t = peek_op();
    if (t.is("=")) return assignment_rest(left_hand_side(std::move(items), comma));
    if (is_augmented(t)) {
        std::vector<std::uint32_t> kids{left_hand_side(std::move(items), comma), anon(), right_hand_side()};
        return node("augmented_assignment", std::move(kids));
    }
    if (items.size() == 1 && !comma) return items[0];
    return node("expression_list", std::move(items));
}

std::uint32_t Parser::left_hand_side(std::vector<std::uint32_t> items, bool comma) {
    if (items.size() == 1 && !comma) return to_pattern(items[0]);
    for (auto& i : items) {
        if (raw_[i].kind != RawKind::Anonymous) i = to_pattern(i);
    }
    return node("pattern_list", std::move(items));
}

std::uint32_t Parser::to_pattern(std::uint32_t i) {
    RawNode& n = raw_[i];
    const std::string_view type = n.type;
    if (type == "identifier" || type == "attribute" || type == "subscript" ||
        type == "list_splat_pattern" || type == "tuple_pattern" || type == "list_pattern" ||
        type == "pattern_list") {
        return i;
    }
    auto convert_children = [&](std::string_view to) {
        raw_[i].type = to;
        const auto kids = raw_[i].children;
        for (std::size_t k = 0; k < kids.size(); ++k) {
            if (raw_[kids[k]].kind == RawKind::Anonymous || raw_[kids[k]].kind == RawKind::Hidden) continue;
            raw_[i].children[k] = to_pattern(kids[k]);
        }
        return i;
    };
    if (type == "tuple" || type == "parenthesized_expression") return convert_children("tuple_pattern");
    if (type == "list") return convert_children("list_pattern");
    if (type == "expression_list") return convert_children("pattern_list");
    if (type == "list_splat") {
        const auto kids = n.children;
        if (kids.size() != 2) throw ParseError{};
        const std::string_view inner = raw_[kids[1]].type;
        if (inner != "identifier" && inner != "attribute" && inner != "subscript") throw ParseError{};
        raw_[i].type = "list_splat_pattern";
        return i;
    }
    throw ParseError{};
}

void Parser::suite(std::vector<std::uint32_t>& kids) {
    Layout l;
    l.newline = true;
    l.indent = true;
    l.operand = true;
    const Token t = peek(l);
    if (t.kind == TokenKind::Indent) {
        kids.push_back(hidden());
        kids.push_back(block_body());
        return;
    }
    if (t.kind == TokenKind::Newline) {
        kids.push_back(node("block", {hidden()}));
        return;
    }
    std::vector<std::uint32_t> bk;
    simple_statements(bk);
    kids.push_back(node("block", std::move(bk)));
}

std::uint32_t Parser::block_body() {
    std::vector<std::uint32_t> bk;
    for (;;) {
        const Token t = peek(statement_layout(true));
        if (t.kind == TokenKind::Dedent) {
            bk.push_back(hidden());
            break;
        }
        if (t.kind == TokenKind::EndOfFile) break;
        if (t.is_layout()) {
            bk.push_back(hidden());
            continue;
        }
        statement_with_recovery(bk, true);
    }
    return node("block", std::move(bk));
}

std::optional<std::uint32_t> Parser::else_clause(bool in_block) {
    if (!peek(statement_layout(in_block)).is("else")) return std::nullopt;
    std::vector<std::uint32_t> kids{anon()};
    kids.push_back(expect_op(":"));
    suite(kids);
    return node("else_clause", std::move(kids));
}

std::uint32_t Parser::if_statement(bool in_block) {
    std::vector<std::uint32_t> kids{anon()};
    kids.push_back(expression());
    kids.push_back(expect_op(":"));
    suite(kids);
    while (peek(statement_layout(in_block)).is("elif")) {
        std::vector<std::uint32_t> ek{anon()};
        ek.push_back(expression());
        ek.push_back(expect_op(":"));
        suite(ek);
        kids.push_back(node("elif_clause", std::move(ek)));
    }
    if (auto e = else_clause(in_block)) kids.push_back(*e);
    return node("if_statement", std::move(kids));
}

std::uint32_t Parser::for_statement(bool in_block) {
    std::vector<std::uint32_t> kids;
    if (peek_operand().is("async")) kids.push_back(anon());
    kids.push_back(expect_operand_kw("for"));
    kids.push_back(targets(true));
    kids.push_back(expect_op("in"));
    kids.push_back(expressions());
    kids.push_back(expect_op(":"));
    suite(kids);
    if (auto e = else_clause(in_block)) kids.push_back(*e);
    return node("for_statement", std::move(kids));
}

std::uint32_t Parser::while_statement(bool in_block) {
    std::vector<std::uint32_t> kids{anon()};
    kids.push_back(expression());
    kids.push_back(expect_op(":"));
    suite(kids);
    if (auto e = else_clause(in_block)) kids.push_back(*e);
    return node("while_statement", std::move(kids));
}

std::uint32_t Parser::try_statement(bool in_block) {
    std::vector<std::uint32_t> kids{anon()};
    kids.push_back(expect_op(":"));
    suite(kids);
    bool any = false;
    for (;;) {
        const Token t = peek(statement_layout(in_block));
        if (t.is("except")) {
            any = true;
            const bool group = t.range.end < src_.size() && src_[t.range.end] == '*';
            std::vector<std::uint32_t> ck;
            if (group) {
                const std::uint32_t seq = ts_.consume();
                const std::uint32_t start = t.range.start;
                peek_op();
                ts_.consume();
                ck.push_back(push_leaf(intern("except*"), RawKind::Anonymous, {start, start + 7}, seq));
            } else {
                ck.push_back(anon());
            }
            if (!peek_op().is(":")) {
                ck.push_back(expression(true));
                if (!group && peek_op().is(",")) {
                    ck.push_back(anon());
                    ck.push_back(expression());
                }
            }
            ck.push_back(expect_op(":"));
            suite(ck);
            kids.push_back(node(group ? "except_group_clause" : "except_clause", std::move(ck)));
        } else if (t.is("else") && any) {
            kids.push_back(*else_clause(in_block));
        } else if (t.is("finally")) {
            std::vector<std::uint32_t> fk{anon()};
            fk.push_back(expect_op(":"));
            suite(fk);
            kids.push_back(node("finally_clause", std::move(fk)));
            any = true;
            break;
        } else {
            break;
        }
    }
    if (!any) throw ParseError{};
    return node("try_statement", std::move(kids));
}

std::uint32_t Parser::with_clause() {
    if (peek_operand().is("(")) {
        std::uint32_t c = 0;
        if (attempt([&] {
                std::vector<std::uint32_t> kids;
                {
                    BracketGuard bg(brackets_);
                    kids.push_back(anon());
                    kids.push_back(node("with_item", {expression(true)}));
                    while (peek_op().is(",")) {
                        kids.push_back(anon());
                        if (peek_operand().is(")")) break;
                        kids.push_back(node("with_item", {expression(true)}));
                    }
                    kids.push_back(expect_op(")"));
                }
                if (!peek_op().is(":")) throw ParseError{};
                c = node("with_clause", std::move(kids));
            })) {
            return c;
        }
    }
    std::vector<std::uint32_t> kids{node("with_item", {expression(true)})};
    while (peek_op().is(",")) {
        kids.push_back(anon());
        kids.push_back(node("with_item", {expression(true)}));
    }
    return node("with_clause", std::move(kids));
}

std::uint32_t Parser::with_statement(bool /*in_block*/) {
    std::vector<std::uint32_t> kids;
    if (peek_operand().is("async")) kids.push_back(anon());
    kids.push_back(expect_operand_kw("with"));
    kids.push_back(with_clause());
    kids.push_back(expect_op(":"));
    suite(kids);
    return node("with_statement", std::move(kids));
}

std::uint32_t Parser::function_definition() {
    std::vector<std::uint32_t> kids;
    if (peek_operand().is("async")) kids.push_back(anon());
    kids.push_back(expect_operand_kw("def"));
    kids.push_back(identifier());
    if (peek_op().is("[")) kids.push_back(type_parameter());
    kids.push_back(parameters());
    if (peek_op().is("->")) {
        kids.push_back(anon());
        kids.push_back(type_expression());
    }
    kids.push_back(expect_op(":"));
    suite(kids);
    return node("function_definition", std::move(kids));
}

std::uint32_t Parser::class_definition() {
    std::vector<std::uint32_t> kids{anon()};
    kids.push_back(identifier());
    if (peek_op().is("[")) kids.push_back(type_parameter());
    if (peek_op().is("(")) kids.push_back(arguments());
    kids.push_back(expect_op(":"));
    suite(kids);
    return node("class_definition", std::move(kids));
}

std::uint32_t Parser::decorated_definition(bool in_block) {
    std::vector<std::uint32_t> kids;
    while (peek(statement_layout(in_block)).is("@")) {
        std::vector<std::uint32_t> dk{anon()};
        dk.push_back(expression());
        Layout nl;
        nl.newline = true;
        if (peek(nl).kind != TokenKind::Newline) throw ParseError{};
        dk.push_back(hidden());
        kids.push_back(node("decorator", std::move(dk)));
    }
    const Token t = peek(statement_layout(in_block));
    if (t.is("def") || (t.is("async") && word_after(t.range.end) == "def")) {
        kids.push_back(function_definition());
    } else if (t.is("class")) {
        kids.push_back(class_definition());
    } else {
        throw ParseError{};
    }
    return node("decorated_definition", std::move(kids));
}

std::uint32_t Parser::match_statement(bool in_block) {
    std::vector<std::uint32_t> kids{anon()};
    kids.push_back(expression());
    while (peek_op().is(",")) {
        kids.push_back(anon());
        if (!starts_operand(peek_maybe_operand())) break;
        kids.push_back(expression());
    }
    kids.push_back(expect_op(":"));
    Layout l;
    l.newline = true;
    l.indent = true;
    const Token t = peek(l);
    if (t.kind == TokenKind::Newline) {
        kids.push_back(node("block", {hidden()}));
        return node("match_statement", std::move(kids));
    }
    if (t.kind != TokenKind::Indent) throw ParseError{};
    std::vector<std::uint32_t> bk{hidden()};
    for (;;) {
        const Token c = peek(statement_layout(true));
        if (c.kind == TokenKind::Dedent) {
            bk.push_back(hidden());
            break;
        }
        if (!c.is("case")) throw ParseError{};
        bk.push_back(case_clause(true));
    }
    kids.push_back(node("block", std::move(bk)));
    (void)in_block;
    return node("match_statement", std::move(kids));
}

std::uint32_t Parser::case_clause(bool /*in_block*/) {
    std::vector<std::uint32_t> kids{anon()};
    kids.push_back(case_pattern());
    while (peek_op().is(",")) {
        kids.push_back(anon());
        const Token t = peek_operand();
        if (t.is(":") || t.is("if")) break;
        kids.push_back(case_pattern());
    }
    if (peek_op().is("if")) {
        std::vector<std::uint32_t> g{anon()};
        g.push_back(expression());
        kids.push_back(node("if_clause", std::move(g)));
    }
    kids.push_back(expect_op(":"));
    suite(kids);
    return node("case_clause", std::move(kids));
}

std::uint32_t Parser::case_pattern() {
    DepthGuard guard(depth_);
    const Token t = peek_operand();
    std::vector<std::uint32_t> inner;
    if (t.kind == TokenKind::Name && !is_hard_keyword(t.text) && char_after(t.range.end) == '=' &&
        (t.range.end + 1 >= src_.size() || src_.substr(t.range.end).find_first_not_of(" \t") == std::string_view::npos ||
         src_[t.range.end + src_.substr(t.range.end).find_first_not_of(" \t") + 1] != '=')) {
        std::vector<std::uint32_t> kw{leaf("identifier"), expect_op("=")};
        const auto sp = simple_pattern();
        kw.insert(kw.end(), sp.begin(), sp.end());
        inner.push_back(node("keyword_pattern", std::move(kw)));
    } else {
        inner = simple_pattern();
    }
    std::uint32_t p = node("case_pattern", std::move(inner));
    while (peek_op().is("as")) {
        std::vector<std::uint32_t> ak{p, anon(), identifier()};
        p = node("case_pattern", {node("as_pattern", std::move(ak))});
    }
    return p;
}

std::vector<std::uint32_t> Parser::simple_pattern() {
    std::vector<std::uint32_t> first = simple_pattern_atom();
    if (!peek_op().is("|")) return first;
    std::vector<std::uint32_t> kids = std::move(first);
    while (peek_op().is("|")) {
        kids.push_back(anon());
        const auto next = simple_pattern_atom();
        kids.insert(kids.end(), next.begin(), next.end());
    }
    return {node("union_pattern", std::move(kids))};
}

std::vector<std::uint32_t> Parser::simple_pattern_atom() {
    DepthGuard guard(depth_);
    const Token t = peek_operand();
    auto sequence = [&](std::string_view type, std::string_view close) {
        BracketGuard bg(brackets_);
        std::vector<std::uint32_t> kids{anon()};
        while (!peek_operand().is(close)) {
            kids.push_back(case_pattern());
            if (!peek_op().is(",")) break;
            kids.push_back(anon());
        }
        kids.push_back(expect_op(close));
        return node(type, std::move(kids));
    };
    if (t.is("*") || t.is("**")) {
        std::vector<std::uint32_t> kids{anon()};
        const Token n = peek_operand();
        if (n.is("_")) {
            kids.push_back(leaf(intern("_"), RawKind::Anonymous));
        } else {
            kids.push_back(identifier());
        }
        return {node("splat_pattern", std::move(kids))};
    }
    if (t.is("[")) return {sequence("list_pattern", "]")};
    if (t.is("(")) return {sequence("tuple_pattern", ")")};
    if (t.is("{")) {
        BracketGuard bg(brackets_);
        std::vector<std::uint32_t> kids{anon()};
        while (!peek_operand().is("}")) {
            if (peek_operand().is("**")) {
                const auto sp = simple_pattern_atom();
                kids.insert(kids.end(), sp.begin(), sp.end());
            } else {
                const auto key = simple_pattern();
                kids.insert(kids.end(), key.begin(), key.end());
                kids.push_back(expect_op(":"));
                kids.push_back(case_pattern());
            }
            if (!peek_op().is(",")) break;
            kids.push_back(anon());
        }
        kids.push_back(expect_op("}"));
        return {node("dict_pattern", std::move(kids))};
    }
    if (t.kind == TokenKind::StringStart) return {strings()};
    if (t.kind == TokenKind::Name) {
        if (t.text == "True") return {leaf("true")};
        if (t.text == "False") return {leaf("false")};
        if (t.text == "None") return {leaf("none")};
        if (t.text == "_" && !peek_op().is(".") ) {
            peek_operand();
            const Token u = cur_;
            (void)u;
            const std::uint32_t us = leaf(intern("_"), RawKind::Anonymous);
            return {us};
        }
        const std::uint32_t name = dotted_name();
        if (!peek_op().is("(")) return {name};
        BracketGuard bg(brackets_);
        std::vector<std::uint32_t> kids{name, anon()};
        while (!peek_operand().is(")")) {
            kids.push_back(case_pattern());
            if (!peek_op().is(",")) break;
            kids.push_back(anon());
        }
        kids.push_back(expect_op(")"));
        return {node("class_pattern", std::move(kids))};
    }
    // Numbers, optionally negative, optionally complex.
    std::vector<std::uint32_t> kids;
    if (t.is("-")) kids.push_back(anon());
    const Token num = peek_operand();
    if (num.kind != TokenKind::Integer && num.kind != TokenKind::Float) throw ParseError{};
    kids.push_back(leaf(num.kind == TokenKind::Integer ? "integer" : "float"));
    const Token op = peek_op();
    if (op.is("+") || op.is("-")) {
        kids.push_back(anon());
        const Token im = peek_operand();
        if (im.kind != TokenKind::Integer && im.kind != TokenKind::Float) throw ParseError{};
        kids.push_back(leaf(im.kind == TokenKind::Integer ? "integer" : "float"));
        return {node("complex_pattern", std::move(kids))};
    }
    return kids;
}

std::uint32_t Parser::dotted_name() {
    std::vector<std::uint32_t> kids{identifier()};
    while (peek_op().is(".")) {
        kids.push_back(anon());
        kids.push_back(identifier());
    }
    return node("dotted_name", std::move(kids));
}

std::uint32_t Parser::import_statement() {
    std::vector<std::uint32_t> kids{anon()};
    for (;;) {
        const std::uint32_t name = dotted_name();
        if (peek_op().is("as")) {
            std::vector<std::uint32_t> ak{name, anon(), identifier()};
            kids.push_back(node("aliased_import", std::move(ak)));
        } else {
            kids.push_back(name);
        }
        if (!peek_op().is(",")) break;
        kids.push_back(anon());
    }
    return node("import_statement", std::move(kids));
}

std::uint32_t Parser::import_from_statement() {
    std::vector<std::uint32_t> kids{anon()};
    bool future = false;
    Token t = peek_operand();
    if (t.is(".") || t.is("...")) {
        std::vector<std::uint32_t> dots;
        while (true) {
            t = peek_operand();
            if (t.is(".")) {
                dots.push_back(anon());
            } else if (t.is("...")) {
                const std::uint32_t seq = ts_.consume();
                const std::uint32_t s = t.range.start;
                const std::string_view dot = intern(".");
                dots.push_back(push_leaf(dot, RawKind::Anonymous, {s, s + 1}, seq));
                dots.push_back(push_leaf(dot, RawKind::Anonymous, {s + 1, s + 2}, ts_.next_seq()));
                dots.push_back(push_leaf(dot, RawKind::Anonymous, {s + 2, s + 3}, ts_.next_seq()));
            } else {
                break;
            }
        }
        std::vector<std::uint32_t> rk{node("import_prefix", std::move(dots))};
        if (!peek_operand().is("import")) rk.push_back(dotted_name());
        kids.push_back(node("relative_import", std::move(rk)));
    } else if (t.is("__future__") && !peek_op().is(".")) {
        peek_operand();
        kids.push_back(anon());
        future = true;
    } else {
        kids.push_back(dotted_name());
    }
    kids.push_back(expect_operand_kw("import"));
    t = peek_operand();
    if (t.is("*")) {
        kids.push_back(node("wildcard_import", {anon()}));
        return node("import_from_statement", std::move(kids));
    }
    auto item = [&] {
        const std::uint32_t name = dotted_name();
        if (!peek_op().is("as")) return name;
        std::vector<std::uint32_t> ak{name, anon(), identifier()};
        return node("aliased_import", std::move(ak));
    };
    if (t.is("(")) {
        BracketGuard bg(brackets_);
        kids.push_back(anon());
        kids.push_back(item());
        while (peek_op().is(",")) {
            kids.push_back(anon());
            if (peek_operand().is(")")) break;
            kids.push_back(item());
        }
        kids.push_back(expect_op(")"));
    } else {
        kids.push_back(item());
        while (peek_op().is(",")) {
            kids.push_back(anon());
            kids.push_back(item());
        }
    }
    return node(future ? "future_import_statement" : "import_from_statement", std::move(kids));
}

std::uint32_t Parser::print_statement() {
    std::vector<std::uint32_t> kids{expect_operand_kw("print")};
    if (peek_operand().is(">>")) {
        std::vector<std::uint32_t> ck{anon(), expression()};
        kids.push_back(node("chevron", std::move(ck)));
    } else {
        kids.push_back(expression());
    }
    while (peek_op().is(",")) {
        kids.push_back(anon());
        if (!starts_operand(peek_maybe_operand())) break;
        kids.push_back(expression());
    }
    return node("print_statement", std::move(kids));
}

std::uint32_t Parser::exec_statement() {
    std::vector<std::uint32_t> kids{expect_operand_kw("exec")};
    const Token t = peek_operand();
    if (t.kind == TokenKind::StringStart) {
        kids.push_back(string());
    } else {
        kids.push_back(identifier());
    }
    if (peek_op().is("in")) {
        kids.push_back(anon());
        kids.push_back(expression());
        while (peek_op().is(",")) {
            kids.push_back(anon());
            kids.push_back(expression());
        }
    }
    return node("exec_statement", std::move(kids));
}

std::uint32_t Parser::type_alias_statement() {
    std::vector<std::uint32_t> kids{expect_operand_kw("type")};
    kids.push_back(type_expression());
    kids.push_back(expect_op("="));
    kids.push_back(type_expression());
    return node("type_alias_statement", std::move(kids));
}

// ===========================================================================
// Expressions

std::uint32_t Parser::expression(bool allow_as, bool allow_conditional) {
    DepthGuard guard(depth_);
    Token t = peek_operand();
    if (t.is("lambda")) return lambda_expression();
    std::uint32_t e = or_test();
    t = peek_op();
    if (t.is(":=") && is_type(e, "identifier")) {
        std::vector<std::uint32_t> kids{e, anon(), expression()};
        return node("named_expression", std::move(kids));
    }
    if (allow_conditional && t.is("if")) {
        std::vector<std::uint32_t> kids{e, anon(), or_test()};
        kids.push_back(expect_op("else"));
        kids.push_back(expression());
        e = node("conditional_expression", std::move(kids));
    }
    if (allow_as && peek_op().is("as")) {
        std::vector<std::uint32_t> kids{e, anon()};
        kids.push_back(node("as_pattern_target", {expression()}));
        e = node("as_pattern", std::move(kids));
    }
    return e;
}

std::uint32_t Parser::or_test() {
    std::uint32_t e = and_test();
    while (peek_op().is("or")) {
        std::vector<std::uint32_t> kids{e, anon()};
        kids.push_back(and_test());
        e = node("boolean_operator", std::move(kids));
    }
    return e;
}

std::uint32_t Parser::and_test() {
    std::uint32_t e = not_test();
    while (peek_op().is("and")) {
        std::vector<std::uint32_t> kids{e, anon()};
        kids.push_back(not_test());
        e = node("boolean_operator", std::move(kids));
    }
    return e;
}

std::uint32_t Parser::not_test() {
    DepthGuard guard(depth_);
    if (peek_operand().is("not")) {
        std::vector<std::uint32_t> kids{anon()};
        kids.push_back(not_test());
        return node("not_operator", std::move(kids));
    }
    return comparison();
}

std::uint32_t Parser::comparison() {
    const std::uint32_t first = binary(14);
    std::vector<std::uint32_t> kids{first};
    for (;;) {
        const Token t = peek_op();
        if (!is_comparison(t)) break;
        if (t.is("not")) {
            const std::uint32_t n = anon();
            if (!peek_operand().is("in")) throw ParseError{};
            kids.push_back(node(intern("not in"), {n, anon()}, RawKind::Anonymous));
        } else if (t.is("is")) {
            const std::uint32_t is = anon();
            if (peek_operand().is("not")) {
                kids.push_back(node(intern("is not"), {is, anon()}, RawKind::Anonymous));
            } else {
                kids.push_back(is);
            }
        } else {
            kids.push_back(anon());
        }
        kids.push_back(binary(14));
    }
    if (kids.size() == 1) return first;
    return node("comparison_operator", std::move(kids));
}

std::uint32_t Parser::binary(int min_prec) {
    DepthGuard guard(depth_);
    std::uint32_t e = unary();
    for (;;) {
        const Token t = peek_op();
        const int p = binary_precedence(t);
        if (p == 0 || p < min_prec) break;
        std::vector<std::uint32_t> kids{e, anon()};
        kids.push_back(binary(t.is("**") ? p : p + 1));
        e = node("binary_operator", std::move(kids));
    }
    return e;
}

std::uint32_t Parser::unary() {
    DepthGuard guard(depth_);
    const Token t = peek_operand();
    if (t.is("-") || t.is("+") || t.is("~")) {
        std::vector<std::uint32_t> kids{anon()};
        kids.push_back(binary(21));
        return node("unary_operator", std::move(kids));
    }
    if (t.is("await")) {
        const std::uint32_t kw = leaf(intern("await"), RawKind::Anonymous);
        if (starts_operand(peek_maybe_operand())) {
            std::vector<std::uint32_t> kids{kw};
            kids.push_back(binary(21));
            return node("await", std::move(kids));
        }
        raw_[kw].type = "identifier";
        raw_[kw].kind = RawKind::Named;
        return postfix(kw);
    }
    return postfix(atom());
}

std::uint32_t Parser::postfix(std::uint32_t e) {
    for (;;) {
        const Token t = peek_op();
        if (t.is(".")) {
            std::vector<std::uint32_t> kids{e, anon(), identifier()};
            e = node("attribute", std::move(kids));
        } else if (t.is("(")) {
            std::vector<std::uint32_t> kids{e, arguments()};
            e = node("call", std::move(kids));
        } else if (t.is("[")) {
            e = subscript(e);
        } else {
            return e;
        }
    }
}

std::uint32_t Parser::atom() {
    DepthGuard guard(depth_);
    const Token t = peek_operand();
    switch (t.kind) {
        case TokenKind::Name:
            if (t.text == "True") return leaf("true");
            if (t.text == "False") return leaf("false");
            if (t.text == "None") return leaf("none");
            if (t.text == "lambda") return lambda_expression();
            return leaf("identifier");
        case TokenKind::Integer: return leaf("integer");
        case TokenKind::Float: return leaf("float");
        case TokenKind::StringStart: return strings();
        case TokenKind::Operator:
            if (t.text == "(") return parenthesized();
            if (t.text == "[") return list_display();
            if (t.text == "{") return brace_display();
            if (t.text == "...") return leaf("ellipsis");
            if (t.text == "*") {
                std::vector<std::uint32_t> kids{anon()};
                kids.push_back(postfix(atom()));
                return node("list_splat", std::move(kids));
            }
            throw ParseError{};
        default: throw ParseError{};
    }
}

std::uint32_t Parser::star_or_expression() {
    if (peek_operand().is("*")) {
        std::vector<std::uint32_t> kids{anon()};
        kids.push_back(expression());
        return node("list_splat", std::move(kids));
    }
    return expression();
}

std::uint32_t Parser::expressions() {
    std::vector<std::uint32_t> items{star_or_expression()};
    bool comma = false;
    while (peek_op().is(",")) {
        comma = true;
        items.push_back(anon());
        if (!starts_operand(peek_maybe_operand())) break;
        items.push_back(star_or_expression());
    }
    if (items.size() == 1 && !comma) return items[0];
    return node("expression_list", std::move(items));
}

std::uint32_t Parser::yield_expression() {
    std::vector<std::uint32_t> kids{expect_operand_kw("yield")};
    const Token t = peek_maybe_operand();
    if (t.is("from")) {
        kids.push_back(anon());
        kids.push_back(expression());
    } else if (starts_operand(t)) {
        kids.push_back(expressions());
    }
    return node("yield", std::move(kids));
}

std::uint32_t Parser::lambda_expression() {
    std::vector<std::uint32_t> kids{expect_operand_kw("lambda")};
    if (!peek_operand().is(":")) kids.push_back(node("lambda_parameters", parameter_list(true)));
    kids.push_back(expect_op(":"));
    kids.push_back(expression());
    return node("lambda", std::move(kids));
}

std::uint32_t Parser::parenthesized() {
    BracketGuard bg(brackets_);
    std::vector<std::uint32_t> kids{anon()};
    Token t = peek_operand();
    if (t.is(")")) {
        kids.push_back(anon());
        return node("tuple", std::move(kids));
    }
    if (t.is("yield")) {
        kids.push_back(yield_expression());
        kids.push_back(expect_op(")"));
        return node("parenthesized_expression", std::move(kids));
    }
    kids.push_back(star_or_expression());
    t = peek_op();
    if (t.is(")")) {
        kids.push_back(anon());
        return node("parenthesized_expression", std::move(kids));
    }
    if (t.is("for") || t.is("async")) {
        comprehension_clauses(kids);
        kids.push_back(expect_op(")"));
        return node("generator_expression", std::move(kids));
    }
    while (peek_op().is(",")) {
        kids.push_back(anon());
        t = peek_operand();
        if (t.is(")")) break;
        kids.push_back(t.is("yield") ? yield_expression() : star_or_expression());
    }
    kids.push_back(expect_op(")"));
    return node("tuple", std::move(kids));
}

std::uint32_t Parser::list_display() {
    BracketGuard bg(brackets_);
    std::vector<std::uint32_t> kids{anon()};
    Token t = peek_operand();
    if (t.is("]")) {
        kids.push_back(anon());
        return node("list", std::move(kids));
    }
    kids.push_back(star_or_expression());
    t = peek_op();
    if (t.is("for") || t.is("async")) {
        comprehension_clauses(kids);
        kids.push_back(expect_op("]"));
        return node("list_comprehension", std::move(kids));
    }
    while (peek_op().is(",")) {
        kids.push_back(anon());
        if (peek_operand().is("]")) break;
        kids.push_back(star_or_expression());
    }
    kids.push_back(expect_op("]"));
    return node("list", std::move(kids));
}

std::uint32_t Parser::brace_display() {
    BracketGuard bg(brackets_);
    std::vector<std::uint32_t> kids{anon()};
    Token t = peek_operand();
    if (t.is("}")) {
        kids.push_back(anon());
        return node("dictionary", std::move(kids));
    }
    auto dict_item = [&]() -> std::uint32_t {
        if (peek_operand().is("**")) {
            std::vector<std::uint32_t> sk{anon()};
            sk.push_back(binary(14));
            return node("dictionary_splat", std::move(sk));
        }
        std::vector<std::uint32_t> pk{expression()};
        pk.push_back(expect_op(":"));
        pk.push_back(expression());
        return node("pair", std::move(pk));
    };
    bool dict = false;
    if (t.is("**")) {
        dict = true;
        kids.push_back(dict_item());
    } else if (t.is("*")) {
        kids.push_back(star_or_expression());
    } else {
        const std::uint32_t e = expression();
        if (peek_op().is(":")) {
            dict = true;
            std::vector<std::uint32_t> pk{e, anon()};
            pk.push_back(expression());
            kids.push_back(node("pair", std::move(pk)));
        } else {
            kids.push_back(e);
        }
    }
    t = peek_op();
    if ((t.is("for") || t.is("async")) && !is_type(kids.back(), "dictionary_splat")) {
        comprehension_clauses(kids);
        kids.push_back(expect_op("}"));
        return node(dict ? "dictionary_comprehension" : "set_comprehension", std::move(kids));
    }
    while (peek_op().is(",")) {
        kids.push_back(anon());
        if (peek_operand().is("}")) break;
        kids.push_back(dict ? dict_item() : star_or_expression());
    }
    kids.push_back(expect_op("}"));
    return node(dict ? "dictionary" : "set", std::move(kids));
}

void Parser::comprehension_clauses(std::vector<std::uint32_t>& kids) {
    for (;;) {
        const Token t = peek_op();
        if (t.is("for") || t.is("async")) {
            kids.push_back(for_in_clause());
        } else if (t.is("if")) {
            std::vector<std::uint32_t> ik{anon()};
            ik.push_back(expression(false, false));
            kids.push_back(node("if_clause", std::move(ik)));
        } else {
            return;
        }
    }
}

std::uint32_t Parser::for_in_clause() {
    std::vector<std::uint32_t> kids;
    if (peek_op().is("async")) kids.push_back(anon());
    kids.push_back(expect_op("for"));
    kids.push_back(targets(true));
    kids.push_back(expect_op("in"));
    kids.push_back(expression(false, false));
    while (peek_op().is(",")) {
        kids.push_back(anon());
        if (!starts_operand(peek_maybe_operand())) break;
        kids.push_back(expression(false, false));
    }
    return node("for_in_clause", std::move(kids));
}

std::uint32_t Parser::targets(bool wrap_list) {
    std::vector<std::uint32_t> items{target()};
    bool comma = false;
    while (peek_op().is(",")) {
        comma = true;
        items.push_back(anon());
        const Token t = peek_operand();
        if (t.is("in") || t.is("=") || !starts_operand(t)) break;
        items.push_back(target());
    }
    if (items.size() == 1 && !comma) return items[0];
    (void)wrap_list;
    return node("pattern_list", std::move(items));
}

std::uint32_t Parser::target() {
    DepthGuard guard(depth_);
    if (peek_operand().is("*")) {
        std::vector<std::uint32_t> kids{anon()};
        kids.push_back(postfix(atom()));
        const std::string_view inner = raw_[kids[1]].type;
        if (inner != "identifier" && inner != "attribute" && inner != "subscript") throw ParseError{};
        return node("list_splat_pattern", std::move(kids));
    }
    return to_pattern(postfix(atom()));
}

std::uint32_t Parser::arguments() {
    BracketGuard bg(brackets_);
    std::vector<std::uint32_t> kids{anon()};
    auto argument = [&]() -> std::uint32_t {
        const Token t = peek_operand();
        if (t.is("*")) {
            std::vector<std::uint32_t> sk{anon()};
            sk.push_back(expression());
            return node("list_splat", std::move(sk));
        }
        if (t.is("**")) {
            std::vector<std::uint32_t> sk{anon()};
            sk.push_back(expression());
            return node("dictionary_splat", std::move(sk));
        }
        const std::uint32_t e = expression();
        if (is_type(e, "identifier") && peek_op().is("=")) {
            std::vector<std::uint32_t> kk{e, anon()};
            kk.push_back(expression());
            return node("keyword_argument", std::move(kk));
        }
        return e;
    };
    if (peek_operand().is(")")) {
        kids.push_back(anon());
        return node("argument_list", std::move(kids));
    }
    kids.push_back(argument());
    const Token t = peek_op();
    if ((t.is("for") || t.is("async")) && raw_[kids.back()].type != "keyword_argument" &&
        raw_[kids.back()].type != "list_splat" && raw_[kids.back()].type != "dictionary_splat") {
        comprehension_clauses(kids);
        kids.push_back(expect_op(")"));
        return node("generator_expression", std::move(kids));
    }
    while (peek_op().is(",")) {
        kids.push_back(anon());
        if (peek_operand().is(")")) break;
        kids.push_back(argument());
    }
    kids.push_back(expect_op(")"));
    return node("argument_list", std::move(kids));
}

std::uint32_t Parser::subscript(std::uint32_t e) {
    BracketGuard bg(brackets_);
    std::vector<std::uint32_t> kids{e, anon()};
    kids.push_back(slice_or_expression());
    while (peek_op().is(",")) {
        kids.push_back(anon());
        if (peek_operand().is("]")) break;
        kids.push_back(slice_or_expression());
    }
    kids.push_back(expect_op("]"));
    return node("subscript", std::move(kids));
}

std::uint32_t Parser::slice_or_expression() {
    std::vector<std::uint32_t> kids;
    if (!peek_operand().is(":")) {
        const std::uint32_t e = star_or_expression();
        if (!peek_op().is(":")) return e;
        kids.push_back(e);
    }
    kids.push_back(anon());
    Token t = peek_operand();
    if (!t.is(":") && starts_operand(t)) kids.push_back(expression());
    if (peek_op().is(":")) {
        kids.push_back(anon());
        t = peek_operand();
        if (starts_operand(t)) kids.push_back(expression());
    }
    return node("slice", std::move(kids));
}

std::uint32_t Parser::strings() {
    const std::uint32_t first = string();
    if (peek_op().kind != TokenKind::StringStart) return first;
    std::vector<std::uint32_t> kids{first};
    while (peek_op().kind == TokenKind::StringStart) kids.push_back(string());
    return node("concatenated_string", std::move(kids));
}

std::uint32_t Parser::string() {
    DepthGuard guard(depth_);
    const Token start = cur_;
    if (start.kind != TokenKind::StringStart) throw ParseError{};
    std::vector<std::uint32_t> kids{leaf("string_start")};
    const StringDelimiter d = TokenStream::delimiter_of(start.text);
    if (d.format) ts_.enter_fstring();
    std::vector<std::uint32_t> content;
    auto flush = [&] {
        if (content.empty()) return;
        kids.push_back(node("string_content", std::move(content)));
        content.clear();
    };
    for (;;) {
        const detail::StringPiece piece = ts_.next_string_piece(d);
        switch (piece.kind) {
            case PieceKind::Content:
                content.push_back(push_leaf({}, RawKind::Hidden, piece.range, ts_.next_seq()));
                break;
            case PieceKind::EscapeSequence:
                content.push_back(push_leaf("escape_sequence", RawKind::Named, piece.range, ts_.next_seq()));
                break;
            case PieceKind::NotEscape:
                content.push_back(push_leaf(intern("\\"), RawKind::Anonymous, piece.range, ts_.next_seq()));
                break;
            case PieceKind::EscapeInterpolation:
                content.push_back(push_leaf("escape_interpolation", RawKind::Named, piece.range, ts_.next_seq()));
                break;
            case PieceKind::OpenBrace:
                flush();
                kids.push_back(interpolation("interpolation"));
                break;
            case PieceKind::End:
                flush();
                kids.push_back(push_leaf("string_end", RawKind::Named, piece.range, ts_.next_seq()));
                if (d.format) ts_.leave_fstring();
                return node("string", std::move(kids));
            case PieceKind::CloseBrace:
            case PieceKind::Unterminated: throw ParseError{};
        }
    }
}

std::uint32_t Parser::interpolation(std::string_view type) {
    DepthGuard guard(depth_);
    BracketGuard bg(brackets_);
    std::vector<std::uint32_t> kids{expect(operand_layout(), "{")};
    {
        const Token t = peek_operand();
        std::vector<std::uint32_t> items;
        bool comma = false;
        items.push_back(t.is("yield") ? yield_expression() : star_or_expression());
        while (peek_op().is(",")) {
            comma = true;
            items.push_back(anon());
            if (!starts_operand(peek_maybe_operand())) break;
            items.push_back(star_or_expression());
        }
        kids.push_back(items.size() == 1 && !comma ? items[0] : node("expression_list", std::move(items)));
    }
    if (peek_op().is("=")) kids.push_back(anon());
    ByteRange conv;
    if (ts_.scan_type_conversion(conv)) kids.push_back(push_leaf("type_conversion", RawKind::Named, conv, ts_.next_seq()));
    if (peek_op().is(":")) {
        std::vector<std::uint32_t> fk{anon()};
        for (;;) {
            const ByteRange text = ts_.scan_format_text();
            if (text.size() > 0) fk.push_back(push_leaf({}, RawKind::Hidden, text, ts_.next_seq()));
            const std::uint32_t p = ts_.position();
            if (p < src_.size() && src_[p] == '{') {
                fk.push_back(interpolation("format_expression"));
                continue;
            }
            break;
        }
        kids.push_back(node("format_specifier", std::move(fk)));
    }
    kids.push_back(expect_op("}"));
    return node(type, std::move(kids));
}

std::vector<std::uint32_t> Parser::parameter_list(bool lambda) {
    std::vector<std::uint32_t> kids;
    const std::string_view close = lambda ? ":" : ")";
    for (;;) {
        const Token t = peek_operand();
        if (t.is(close) || t.is(":")) break;
        kids.push_back(parameter(lambda));
        if (!peek_op().is(",")) break;
        kids.push_back(anon());
    }
    return kids;
}

std::uint32_t Parser::parameter(bool lambda) {
    DepthGuard guard(depth_);
    const Token t = peek_operand();
    auto typed = [&](std::uint32_t p) {
        if (lambda || !peek_op().is(":")) return p;
        std::vector<std::uint32_t> kids{p, anon(), type_expression()};
        return node("typed_parameter", std::move(kids));
    };
    if (t.is("*")) {
        const std::uint32_t star = anon();
        const Token n = peek_operand();
        if (n.is(",") || n.is(")") || n.is(":")) return node("keyword_separator", {star});
        std::vector<std::uint32_t> kids{star, identifier()};
        return typed(node("list_splat_pattern", std::move(kids)));
    }
    if (t.is("**")) {
        std::vector<std::uint32_t> kids{anon(), identifier()};
        return typed(node("dictionary_splat_pattern", std::move(kids)));
    }
    if (t.is("/")) return node("positional_separator", {anon()});
    std::uint32_t p = 0;
    if (t.is("(")) {
        p = to_pattern(parenthesized());
    } else {
        p = identifier();
    }
    if (!lambda && peek_op().is(":")) {
        std::vector<std::uint32_t> kids{p, anon(), type_expression()};
        if (peek_op().is("=")) {
            kids.push_back(anon());
            kids.push_back(expression());
            return node("typed_default_parameter", std::move(kids));
        }
        return node("typed_parameter", std::move(kids));
    }
    if (peek_op().is("=")) {
        std::vector<std::uint32_t> kids{p, anon(), expression()};
        return node("default_parameter", std::move(kids));
    }
    return p;
}

std::uint32_t Parser::parameters() {
    std::vector<std::uint32_t> kids{expect_op("(")};
    {
        BracketGuard bg(brackets_);
        auto inner = parameter_list(false);
        kids.insert(kids.end(), inner.begin(), inner.end());
        const Token t = peek_op();
        if (t.is(")")) {
            kids.push_back(anon());
        } else if (t.is(":")) {
            kids.push_back(missing(intern(")"), RawKind::Anonymous, t.range.start));
        } else {
            throw ParseError{};
        }
    }
    return node("parameters", std::move(kids));
}

std::uint32_t Parser::type_expression() {
    DepthGuard guard(depth_);
    const Token t = peek_operand();
    if (t.is("*") || t.is("**")) {
        std::vector<std::uint32_t> kids{anon(), identifier()};
        return node("type", {node("splat_type", std::move(kids))});
    }
    static constexpr std::string_view kSoft[] = {"print", "exec", "async", "await", "match", "type"};
    const bool soft = std::find(std::begin(kSoft), std::end(kSoft), t.text) != std::end(kSoft);
    if (t.kind == TokenKind::Name && !is_hard_keyword(t.text) && !soft && char_after(t.range.end) == '[') {
        std::vector<std::uint32_t> gk{leaf("identifier")};
        gk.push_back(type_parameter());
        std::uint32_t g = node("generic_type", std::move(gk));
        while (peek_op().is(".")) {
            std::vector<std::uint32_t> mk{node("type", {g}), anon(), identifier()};
            g = node("member_type", std::move(mk));
        }
        if (peek_op().is("|")) {
            std::vector<std::uint32_t> uk{node("type", {g}), anon(), type_expression()};
            g = node("union_type", std::move(uk));
        }
        return node("type", {g});
    }
    return node("type", {expression()});
}

std::uint32_t Parser::type_parameter() {
    BracketGuard bg(brackets_);
    std::vector<std::uint32_t> kids{expect_op("[")};
    for (;;) {
        std::uint32_t ty = type_expression();
        if (peek_op().is(":")) {
            std::vector<std::uint32_t> ck{ty, anon(), type_expression()};
            ty = node("type", {node("constrained_type", std::move(ck))});
        }
        kids.push_back(ty);
        if (!peek_op().is(",")) break;
        kids.push_back(anon());
        if (peek_operand().is("]")) break;
    }
    kids.push_back(expect_op("]"));
    return node("type_parameter", std::move(kids));
}

// ===========================================================================
// Assembly: place comments, compute extents, drop hidden tokens.

Tree Parser::finish(std::uint32_t root) {
    const std::size_t count = raw_.size();
    std::vector<std::uint32_t> first(count, kNoSeq), last(count, 0);
    std::vector<bool> has(count, false);

    // Children always have smaller indices than their parents.
    for (std::uint32_t i = 0; i < count; ++i) {
        const RawNode& n = raw_[i];
        if (n.leaf) {
            first[i] = last[i] = n.seq;
            has[i] = true;
            continue;
        }
        for (auto c : n.children) {
            if (!has[c]) continue;
            first[i] = std::min(first[i], first[c]);
            last[i] = std::max(last[i], last[c]);
            has[i] = true;
        }
    }

    for (const auto& extra : ts_.extras()) {
        std::uint32_t at = root;
        for (;;) {
            bool descended = false;
            for (auto c : raw_[at].children) {
                if (raw_[c].leaf || !has[c]) continue;
                if (first[c] < extra.seq && extra.seq < last[c]) {
                    at = c;
                    descended = true;
                    break;
                }
            }
            if (!descended) break;
        }
        const std::uint32_t e = push_leaf(extra.type, RawKind::Extra, extra.range, extra.seq);
        first.push_back(extra.seq);
        last.push_back(extra.seq);
        has.push_back(true);
        auto& kids = raw_[at].children;
        auto pos = std::find_if(kids.begin(), kids.end(), [&](std::uint32_t c) {
            return has[c] && first[c] > extra.seq;
        });
        kids.insert(pos, e);
    }

    // Extents, bottom-up. Extras were appended after their parents, so walk
    // recursively rather than by index.
    std::vector<std::uint32_t> order;
    {
        std::vector<std::pair<std::uint32_t, bool>> stack{{root, false}};
        while (!stack.empty()) {
            auto [i, expanded] = stack.back();
            stack.pop_back();
            if (expanded) {
                order.push_back(i);
                continue;
            }
            stack.push_back({i, true});
            for (auto c : raw_[i].children) stack.push_back({c, false});
        }
    }
    const auto n = static_cast<std::uint32_t>(src_.size());
    for (auto i : order) {
        RawNode& r = raw_[i];
        if (r.leaf) continue;
        if (r.children.empty()) {
            r.range = {n, n};
            continue;
        }
        r.range = {raw_[r.children.front()].range.start, raw_[r.children.back()].range.end};
    }
    raw_[root].range.end = n;
    if (raw_[root].children.empty()) raw_[root].range.start = n;

    // Emit in pre-order without hidden nodes.
    std::vector<Node> nodes;
    nodes.reserve(raw_.size());
    auto emit = [&](auto&& self, std::uint32_t i) -> std::uint32_t {
        const RawNode& r = raw_[i];
        const auto out = static_cast<std::uint32_t>(nodes.size());
        nodes.push_back(Node{r.type, r.range, r.kind == RawKind::Named || r.kind == RawKind::Extra,
                             r.missing, {}});
        std::vector<std::uint32_t> kids;
        for (auto c : r.children) {
            if (raw_[c].kind == RawKind::Hidden) continue;
            kids.push_back(self(self, c));
        }
        nodes[out].children = std::move(kids);
        return out;
    };
    const std::uint32_t out_root = emit(emit, root);
    return Tree(std::string(src_), std::move(nodes), out_root);
}

}  // namespace

Tree parse_python(std::string_view source) {
    Parser parser(source);
    return parser.run();
}

}  // namespace syntaxeval::ast
