#pragma once

// Token stream for the Python parser. Layout tokens (newline, indent, dedent)
// are zero-width and only produced when the parser says it can accept them,
// which mirrors how the tree-sitter external scanner behaves.

#include "syntaxeval/ast.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace syntaxeval::ast::detail {

enum class TokenKind : std::uint8_t {
    EndOfFile,
    Newline,
    Indent,
    Dedent,
    Name,
    Integer,
    Float,
    StringStart,
    Operator,
    Unknown,
};

// Which layout tokens the parser can accept at the current position.
struct Layout {
    bool newline = false;
    bool indent = false;
    bool dedent = false;
    bool operand = false;  // a string could start here
    bool in_brackets = false;
};

struct Token {
    TokenKind kind = TokenKind::EndOfFile;
    ByteRange range;
    std::string_view text;

    [[nodiscard]] bool is(std::string_view s) const {
        return (kind == TokenKind::Operator || kind == TokenKind::Name) && text == s;
    }
    [[nodiscard]] bool is_layout() const {
        return kind == TokenKind::Newline || kind == TokenKind::Indent || kind == TokenKind::Dedent;
    }
};

// A comment or line continuation, placed into the tree after parsing.
struct Extra {
    std::string_view type;
    ByteRange range;
    std::uint32_t seq = 0;
};

struct StringDelimiter {
    char quote = '"';
    bool triple = false;
    bool raw = false;
    bool bytes = false;
    bool format = false;
};

enum class PieceKind : std::uint8_t {
    Content,              // plain characters (hidden)
    EscapeSequence,       // escape_sequence
    NotEscape,            // lone backslash, shown as "\\"
    EscapeInterpolation,  // {{ or }}
    OpenBrace,            // start of an interpolation (not consumed)
    CloseBrace,           // unmatched } (not consumed)
    End,                  // closing quote(s)
    Unterminated,
};

struct StringPiece {
    PieceKind kind = PieceKind::Unterminated;
    ByteRange range;
};

class TokenStream {
public:
    explicit TokenStream(std::string_view source);

    struct Snapshot {
        std::uint32_t pos;
        std::vector<std::uint32_t> indents;
        std::size_t extras;
        std::uint32_t seq;
        int fstring_depth;
    };

    [[nodiscard]] Snapshot snapshot() const;
    void restore(const Snapshot& s);

    // Next token without consuming it. Extras before it are remembered
    // and committed by consume().
    const Token& peek(const Layout& layout);

    // Consume the token returned by the last peek(); returns its sequence number.
    std::uint32_t consume();

    [[nodiscard]] std::uint32_t position() const { return pos_; }
    [[nodiscard]] std::string_view source() const { return src_; }
    [[nodiscard]] const std::vector<Extra>& extras() const { return extras_; }
    [[nodiscard]] std::uint32_t next_seq() { return seq_++; }

    // String scanning, driven by the parser. These consume directly.
    [[nodiscard]] static StringDelimiter delimiter_of(std::string_view start_token);
    StringPiece next_string_piece(const StringDelimiter& delim);
    void enter_fstring() { ++fstring_depth_; }
    void leave_fstring() {
        if (fstring_depth_ > 0) --fstring_depth_;
    }

    // Raw characters of a format specifier up to '{', '}' or newline.
    // Returns an empty range when none.
    ByteRange scan_format_text();

    // Type conversion "!x" right at the current position, if present.
    bool scan_type_conversion(ByteRange& out);

    // Skip plain whitespace (no comments) and report the next byte.
    [[nodiscard]] char peek_char_after_space() const;

private:
    struct LayoutResult {
        TokenKind kind;
        bool found;
        std::uint32_t indent = 0;
    };
    LayoutResult scan_layout(std::uint32_t at, const Layout& layout) const;
    Token lex_plain(std::uint32_t at, bool operand) const;
    std::uint32_t skip_space(std::uint32_t at) const;

    std::string_view src_;
    std::uint32_t pos_ = 0;
    std::vector<std::uint32_t> indents_{0};
    std::vector<Extra> extras_;
    std::uint32_t seq_ = 0;
    int fstring_depth_ = 0;

    // peek cache
    bool has_peek_ = false;
    std::uint32_t peek_pos_ = 0;
    Layout peek_layout_{};
    Token peeked_{};
    std::vector<Extra> pending_;
    std::uint32_t pending_indent_ = 0;
};

}  // namespace syntaxeval::ast::detail
