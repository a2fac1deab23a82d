#include "python_lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace syntaxeval::ast::detail {

namespace {

bool is_name_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool is_name_char(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_hex(char c) { return std::isxdigit(static_cast<unsigned char>(c)) != 0; }
bool is_quote(char c) { return c == '"' || c == '\'' || c == '`'; }

constexpr std::array<std::string_view, 5> kOps3 = {"**=", "//=", ">>=", "<<=", "..."};
constexpr std::array<std::string_view, 20> kOps2 = {
    "**", "//", ">>", "<<", "<=", ">=", "==", "!=", "<>", "->",
    ":=", "+=", "-=", "*=", "/=", "@=", "%=", "&=", "|=", "^=",
};
constexpr std::string_view kOps1 = "+-*/%@&|^~<>()[]{},:;.=";

bool layout_equal(const Layout& a, const Layout& b) {
    return a.newline == b.newline && a.indent == b.indent && a.dedent == b.dedent &&
           a.operand == b.operand && a.in_brackets == b.in_brackets;
}

}  // namespace

TokenStream::TokenStream(std::string_view source) : src_(source) {}

TokenStream::Snapshot TokenStream::snapshot() const {
    return {pos_, indents_, extras_.size(), seq_, fstring_depth_};
}

void TokenStream::restore(const Snapshot& s) {
    pos_ = s.pos;
    indents_ = s.indents;
    extras_.resize(s.extras);
    seq_ = s.seq;
    fstring_depth_ = s.fstring_depth;
    has_peek_ = false;
}

std::uint32_t TokenStream::skip_space(std::uint32_t at) const {
    while (at < src_.size()) {
        const char c = src_[at];
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
            ++at;
        } else if (static_cast<unsigned char>(c) == 0xC2 && at + 1 < src_.size() &&
                   static_cast<unsigned char>(src_[at + 1]) == 0xA0) {
            at += 2;  // non-breaking space
        } else {
            break;
        }
    }
    return at;
}

TokenStream::LayoutResult TokenStream::scan_layout(std::uint32_t at, const Layout& layout) const {
    const LayoutResult none{TokenKind::Unknown, false, 0};
    if (!layout.newline && !layout.indent && !layout.dedent && layout.in_brackets) return none;
    const auto n = static_cast<std::uint32_t>(src_.size());
    std::uint32_t q = at;
    bool found_eol = false;
    std::uint32_t indent = 0;
    std::int64_t first_comment_indent = -1;
    for (;;) {
        if (q >= n) {
            found_eol = true;
            indent = 0;
            break;
        }
        const char c = src_[q];
        if (c == '\n') {
            found_eol = true;
            indent = 0;
            ++q;
        } else if (c == ' ') {
            ++indent;
            ++q;
        } else if (c == '\r' || c == '\f') {
            indent = 0;
            ++q;
        } else if (c == '\t') {
            indent += 8;
            ++q;
        } else if (c == '#') {
            if (!found_eol) return none;
            if (first_comment_indent < 0) first_comment_indent = indent;
            while (q < n && src_[q] != '\n') ++q;
            if (q < n) ++q;
            indent = 0;
        } else if (c == '\\') {
            ++q;
            if (q < n && src_[q] == '\r') ++q;
            if (q < n && src_[q] == '\n') {
                ++q;
            } else if (q < n) {
                return none;
            }
        } else {
            break;
        }
    }
    if (!found_eol) return none;
    const std::uint32_t cur = indents_.back();
    if (layout.indent && indent > cur) return {TokenKind::Indent, true, indent};
    const bool next_is_quote = q < n && (is_quote(src_[q]) || src_[q] == '`');
    const bool may_dedent =
        layout.dedent ||
        (!layout.newline && !(layout.operand && next_is_quote) && !layout.in_brackets);
    if (may_dedent && indent < cur && fstring_depth_ == 0 &&
        first_comment_indent < static_cast<std::int64_t>(cur)) {
        return {TokenKind::Dedent, true};
    }
    if (layout.newline) return {TokenKind::Newline, true};
    return none;
}

Token TokenStream::lex_plain(std::uint32_t at, bool /*operand*/) const {
    const auto n = static_cast<std::uint32_t>(src_.size());
    auto make = [&](TokenKind kind, std::uint32_t end) {
        return Token{kind, {at, end}, src_.substr(at, end - at)};
    };
    if (at >= n) return make(TokenKind::EndOfFile, at);
    const char c = src_[at];

    if (is_name_start(static_cast<unsigned char>(c))) {
        std::uint32_t q = at;
        while (q < n && is_name_char(static_cast<unsigned char>(src_[q]))) ++q;
        const std::string_view word = src_.substr(at, q - at);
        if (q < n && is_quote(src_[q]) && word.size() <= 3 &&
            std::all_of(word.begin(), word.end(), [](char ch) {
                return std::string_view("rRbBuUfF").find(ch) != std::string_view::npos;
            })) {
            const char quote = src_[q];
            const bool triple = quote != '`' && q + 2 < n && src_[q + 1] == quote && src_[q + 2] == quote;
            return make(TokenKind::StringStart, q + (triple ? 3 : 1));
        }
        return make(TokenKind::Name, q);
    }
    if (is_quote(c)) {
        const bool triple = c != '`' && at + 2 < n && src_[at + 1] == c && src_[at + 2] == c;
        return make(TokenKind::StringStart, at + (triple ? 3 : 1));
    }

    if (is_digit(c) || (c == '.' && at + 1 < n && is_digit(src_[at + 1]))) {
        std::uint32_t q = at;
        auto digits = [&](auto pred) {
            // repeat1(/_?[d]+/) after a leading run, or ([d]+_?)+
            const std::uint32_t begin = q;
            while (q < n) {
                if (pred(src_[q])) {
                    ++q;
                } else if (src_[q] == '_' && q > begin && q + 1 < n && pred(src_[q + 1])) {
                    ++q;
                } else {
                    break;
                }
            }
            return q > begin;
        };
        if (c == '0' && at + 1 < n && std::string_view("xXoObB").find(src_[at + 1]) != std::string_view::npos) {
            const char base = static_cast<char>(std::tolower(static_cast<unsigned char>(src_[at + 1])));
            q = at + 2;
            const std::uint32_t begin = q;
            while (q < n) {
                const char d = src_[q];
                const bool ok = base == 'x' ? is_hex(d) : base == 'o' ? (d >= '0' && d <= '7') : (d == '0' || d == '1');
                if (ok || (d == '_' && q + 1 < n)) {
                    if (d == '_') {
                        const char e = src_[q + 1];
                        const bool ok2 = base == 'x' ? is_hex(e) : base == 'o' ? (e >= '0' && e <= '7') : (e == '0' || e == '1');
                        if (!ok2) break;
                    }
                    ++q;
                } else {
                    break;
                }
            }
            if (q == begin) return make(TokenKind::Integer, at + 1);
            if (q < n && (src_[q] == 'l' || src_[q] == 'L')) ++q;
            return make(TokenKind::Integer, q);
        }
        const bool has_int = digits(is_digit);
        if (has_int && q < n && src_[q] == '_') ++q;  // trailing underscore, as in /([0-9]+_?)+/
        bool is_float = false;
        if (q < n && src_[q] == '.' && (has_int || (q + 1 < n && is_digit(src_[q + 1])))) {
            const std::uint32_t dot = q;
            ++q;
            const bool frac = digits(is_digit);
            if (!has_int && !frac) {
                q = dot;
            } else {
                is_float = true;
            }
        }
        if (q < n && (src_[q] == 'e' || src_[q] == 'E')) {
            std::uint32_t e = q + 1;
            if (e < n && (src_[e] == '+' || src_[e] == '-')) ++e;
            if (e < n && is_digit(src_[e])) {
                q = e;
                digits(is_digit);
                is_float = true;
            }
        }
        if (q < n) {
            const char s = src_[q];
            if (s == 'j' || s == 'J' || s == 'l' || s == 'L') ++q;
        }
        return make(is_float ? TokenKind::Float : TokenKind::Integer, q);
    }

    for (auto op : kOps3) {
        if (src_.substr(at, 3) == op) return make(TokenKind::Operator, at + 3);
    }
    for (auto op : kOps2) {
        if (src_.substr(at, 2) == op) return make(TokenKind::Operator, at + 2);
    }
    if (kOps1.find(c) != std::string_view::npos) return make(TokenKind::Operator, at + 1);

    // One UTF-8 character we do not understand.
    std::uint32_t q = at + 1;
    while (q < n && (static_cast<unsigned char>(src_[q]) & 0xC0) == 0x80) ++q;
    return make(TokenKind::Unknown, q);
}

const Token& TokenStream::peek(const Layout& layout) {
    if (has_peek_ && peek_pos_ == pos_ && layout_equal(layout, peek_layout_)) return peeked_;
    pending_.clear();
    std::uint32_t at = pos_;
    const auto n = static_cast<std::uint32_t>(src_.size());
    for (;;) {
        const LayoutResult r = scan_layout(at, layout);
        if (r.found) {
            peeked_ = Token{r.kind, {at, at}, {}};
            pending_indent_ = r.indent;
            break;
        }
        const std::uint32_t p = skip_space(at);
        if (p < n && src_[p] == '#') {
            std::uint32_t end = p;
            while (end < n && src_[end] != '\n' && src_[end] != '\r') ++end;
            pending_.push_back({"comment", {p, end}, 0});
            at = end;
            continue;
        }
        if (p < n && src_[p] == '\\') {
            std::uint32_t q = p + 1;
            if (q < n && src_[q] == '\r') ++q;
            if (q < n && (src_[q] == '\n' || src_[q] == '\0')) {
                pending_.push_back({"line_continuation", {p, q + 1}, 0});
                at = q + 1;
                continue;
            }
        }
        peeked_ = lex_plain(p, layout.operand);
        if (peeked_.kind == TokenKind::StringStart) {
            // The scanner swallows continuations right before a string.
            std::erase_if(pending_, [](const Extra& e) { return e.type == "line_continuation"; });
        }
        break;
    }
    has_peek_ = true;
    peek_pos_ = pos_;
    peek_layout_ = layout;
    return peeked_;
}

std::uint32_t TokenStream::consume() {
    for (auto e : pending_) {
        e.seq = seq_++;
        extras_.push_back(e);
    }
    pending_.clear();
    const std::uint32_t seq = seq_++;
    if (peeked_.kind == TokenKind::Indent) {
        indents_.push_back(pending_indent_);
    } else if (peeked_.kind == TokenKind::Dedent) {
        if (indents_.size() > 1) indents_.pop_back();
    }
    pos_ = peeked_.range.end;
    has_peek_ = false;
    return seq;
}

StringDelimiter TokenStream::delimiter_of(std::string_view start) {
    StringDelimiter d;
    std::size_t i = 0;
    while (i < start.size() && !is_quote(start[i])) {
        switch (start[i]) {
            case 'r': case 'R': d.raw = true; break;
            case 'b': case 'B': d.bytes = true; break;
            case 'f': case 'F': d.format = true; break;
            default: break;
        }
        ++i;
    }
    d.quote = i < start.size() ? start[i] : '"';
    d.triple = start.size() - i == 3;
    return d;
}

StringPiece TokenStream::next_string_piece(const StringDelimiter& d) {
    has_peek_ = false;
    const auto n = static_cast<std::uint32_t>(src_.size());
    const std::uint32_t p = pos_;
    auto done = [&](PieceKind kind, std::uint32_t end) {
        pos_ = end;
        return StringPiece{kind, {p, end}};
    };
    if (p >= n) return {PieceKind::Unterminated, {p, p}};
    const char c = src_[p];

    if (d.format && (c == '{' || c == '}')) {
        if (p + 1 < n && src_[p + 1] == c) return done(PieceKind::EscapeInterpolation, p + 2);
        return {c == '{' ? PieceKind::OpenBrace : PieceKind::CloseBrace, {p, p}};
    }
    if (c == '\\' && !d.raw) {
        const char e = p + 1 < n ? src_[p + 1] : '\0';
        const bool bytes_literal = d.bytes && (e == 'N' || e == 'u' || e == 'U');
        if (!bytes_literal) {
            const std::uint32_t b = p + 1;
            auto hex_run = [&](std::uint32_t from, std::uint32_t count) {
                if (from + count > n) return false;
                for (std::uint32_t i = 0; i < count; ++i) {
                    if (!is_hex(src_[from + i])) return false;
                }
                return true;
            };
            std::uint32_t end = 0;
            if (e == 'u' && hex_run(b + 1, 4)) {
                end = b + 5;
            } else if (e == 'U' && hex_run(b + 1, 8)) {
                end = b + 9;
            } else if (e == 'x' && hex_run(b + 1, 2)) {
                end = b + 3;
            } else if (b < n && is_digit(src_[b])) {
                end = b + 1;
                while (end < n && end < b + 3 && is_digit(src_[end])) ++end;
            } else if (e == '\r' && b + 1 < n && src_[b + 1] == '\n') {
                end = b + 2;
            } else if (e == '\n') {
                end = b + 1;
            } else if (e != '\0' && std::string_view("'\"abfrntv\\").find(e) != std::string_view::npos) {
                end = b + 1;
            } else if (e == 'N' && b + 1 < n && src_[b + 1] == '{') {
                std::uint32_t q = b + 2;
                while (q < n && src_[q] != '}') ++q;
                if (q < n && q > b + 2) end = q + 1;
            }
            if (end != 0) return done(PieceKind::EscapeSequence, end);
            return done(PieceKind::NotEscape, p + 1);
        }
    }
    std::uint32_t q = p;
    bool has = false;
    while (q < n) {
        const char ch = src_[q];
        if (d.format && (ch == '{' || ch == '}')) break;
        if (ch == '\\') {
            if (d.raw) {
                // Backslashes in raw strings do not count as content.
                ++q;
                if (q < n && (src_[q] == d.quote || src_[q] == '\\')) {
                    ++q;
                }
                if (q < n && src_[q] == '\r') {
                    ++q;
                    if (q < n && src_[q] == '\n') ++q;
                } else if (q < n && src_[q] == '\n') {
                    ++q;
                }
                continue;
            }
            if (d.bytes && q + 1 < n && (src_[q + 1] == 'N' || src_[q + 1] == 'u' || src_[q + 1] == 'U')) {
                q = std::min(q + 3, n);
                has = true;
                continue;
            }
            break;
        }
        if (ch == d.quote) {
            const bool closing = !d.triple || (q + 2 < n && src_[q + 1] == ch && src_[q + 2] == ch);
            if (closing) {
                if (has) break;
                return done(PieceKind::End, q + (d.triple ? 3 : 1));
            }
        }
        if (ch == '\n' && has && !d.triple) return {PieceKind::Unterminated, {p, q}};
        ++q;
        has = true;
    }
    if (q >= n) return {PieceKind::Unterminated, {p, q}};
    return done(PieceKind::Content, q);
}

ByteRange TokenStream::scan_format_text() {
    has_peek_ = false;
    const auto n = static_cast<std::uint32_t>(src_.size());
    std::uint32_t q = pos_;
    while (q < n && src_[q] != '{' && src_[q] != '}' && src_[q] != '\n') ++q;
    const ByteRange r{pos_, q};
    pos_ = q;
    return r;
}

bool TokenStream::scan_type_conversion(ByteRange& out) {
    const auto n = static_cast<std::uint32_t>(src_.size());
    std::uint32_t q = pos_;
    while (q < n && (src_[q] == ' ' || src_[q] == '\t')) ++q;
    if (q + 1 < n && src_[q] == '!' && src_[q + 1] >= 'a' && src_[q + 1] <= 'z') {
        has_peek_ = false;
        out = {q, q + 2};
        pos_ = q + 2;
        return true;
    }
    return false;
}

char TokenStream::peek_char_after_space() const {
    std::uint32_t q = pos_;
    while (q < src_.size() && (src_[q] == ' ' || src_[q] == '\t')) ++q;
    return q < src_.size() ? src_[q] : '\0';
}

}  // namespace syntaxeval::ast::detail
