#include "syntaxeval/toml.hpp"

#include "syntaxeval/error.hpp"

#include <fmt/format.h>

#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <string>

namespace syntaxeval::toml {

using json = nlohmann::ordered_json;

namespace {

class Reader {
public:
    explicit Reader(std::string_view s) : s_(s) {}

    json run() {
        json root = json::object();
        json* table = &root;
        for (;;) {
            skip_blank_lines();
            if (eof()) break;
            if (peek() == '[') {
                if (at("[[")) fail("arrays of tables are not supported");
                ++pos_;
                skip_ws();
                auto path = key_path();
                skip_ws();
                expect(']');
                table = &root;
                for (const auto& k : path) {
                    json& next = (*table)[k];
                    if (next.is_null()) next = json::object();
                    if (!next.is_object()) fail(fmt::format("\"{}\" is not a table", k));
                    table = &next;
                }
            } else {
                auto path = key_path();
                skip_ws();
                expect('=');
                skip_ws();
                json v = value();
                json* t = table;
                for (std::size_t i = 0; i + 1 < path.size(); ++i) {
                    json& next = (*t)[path[i]];
                    if (next.is_null()) next = json::object();
                    if (!next.is_object()) fail(fmt::format("\"{}\" is not a table", path[i]));
                    t = &next;
                }
                if (t->contains(path.back())) fail(fmt::format("duplicate key \"{}\"", path.back()));
                (*t)[path.back()] = std::move(v);
            }
            end_of_line();
        }
        return root;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw FormatError(fmt::format("line {}: {}", line_, what));
    }
    bool eof() const { return pos_ >= s_.size(); }
    char peek() const { return eof() ? '\0' : s_[pos_]; }
    bool at(std::string_view p) const { return s_.substr(pos_, p.size()) == p; }
    void expect(char c) {
        if (peek() != c) fail(fmt::format("expected '{}'", c));
        ++pos_;
    }
    void skip_ws() {
        while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos_;
    }
    void skip_comment() {
        if (peek() == '#') {
            while (!eof() && peek() != '\n') ++pos_;
        }
    }
    void newline() {
        if (peek() == '\r') ++pos_;
        if (peek() == '\n') {
            ++pos_;
            ++line_;
        }
    }
    void skip_blank_lines() {
        for (;;) {
            skip_ws();
            skip_comment();
            if (peek() == '\n' || peek() == '\r') {
                newline();
                continue;
            }
            return;
        }
    }
    // whitespace, comments and newlines inside arrays
    void skip_all() {
        for (;;) {
            skip_ws();
            skip_comment();
            if (peek() == '\n' || peek() == '\r') {
                newline();
                continue;
            }
            return;
        }
    }
    void end_of_line() {
        skip_ws();
        skip_comment();
        if (eof()) return;
        if (peek() != '\n' && peek() != '\r') fail("unexpected text after value");
        newline();
    }

    std::vector<std::string> key_path() {
        std::vector<std::string> path{key()};
        for (;;) {
            skip_ws();
            if (peek() != '.') return path;
            ++pos_;
            skip_ws();
            path.push_back(key());
        }
    }

    std::string key() {
        if (peek() == '"') return basic_string();
        if (peek() == '\'') return literal_string();
        const auto start = pos_;
        while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) ++pos_;
        if (pos_ == start) fail("expected a key");
        return std::string(s_.substr(start, pos_ - start));
    }

    std::string basic_string() {
        expect('"');
        std::string out;
        for (;;) {
            if (eof() || peek() == '\n') fail("unterminated string");
            char c = s_[pos_++];
            if (c == '"') return out;
            if (c != '\\') {
                out += c;
                continue;
            }
            if (eof()) fail("unterminated string");
            c = s_[pos_++];
            switch (c) {
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                case 'r': out += '\r'; break;
                case 'b': out += '\b'; break;
                case 'f': out += '\f'; break;
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                case 'u':
                case 'U': {
                    const std::size_t len = c == 'u' ? 4 : 8;
                    if (pos_ + len > s_.size()) fail("bad unicode escape");
                    unsigned long cp = 0;
                    auto hex = s_.substr(pos_, len);
                    auto [p, ec] = std::from_chars(hex.data(), hex.data() + len, cp, 16);
                    if (ec != std::errc() || p != hex.data() + len) fail("bad unicode escape");
                    pos_ += len;
                    append_utf8(out, cp);
                    break;
                }
                default: fail(fmt::format("unknown escape \\{}", c));
            }
        }
    }

    static void append_utf8(std::string& out, unsigned long cp) {
        if (cp < 0x80) {
            out += static_cast<char>(cp);
        } else if (cp < 0x800) {
            out += static_cast<char>(0xC0 | (cp >> 6));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        } else if (cp < 0x10000) {
            out += static_cast<char>(0xE0 | (cp >> 12));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        } else {
            out += static_cast<char>(0xF0 | (cp >> 18));
            out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        }
    }

    std::string literal_string() {
        expect('\'');
        const auto start = pos_;
        while (!eof() && peek() != '\'' && peek() != '\n') ++pos_;
        if (peek() != '\'') fail("unterminated string");
        std::string out(s_.substr(start, pos_ - start));
        ++pos_;
        return out;
    }

    json value() {
        const char c = peek();
        if (at("\"\"\"") || at("'''")) fail("multi-line strings are not supported");
        if (c == '"') return basic_string();
        if (c == '\'') return literal_string();
        if (c == '[') return array();
        if (c == '{') return inline_table();
        if (at("true")) {
            pos_ += 4;
            return true;
        }
        if (at("false")) {
            pos_ += 5;
            return false;
        }
        return number();
    }

    json array() {
        expect('[');
        json arr = json::array();
        for (;;) {
            skip_all();
            if (peek() == ']') {
                ++pos_;
                return arr;
            }
            arr.push_back(value());
            skip_all();
            if (peek() == ',') {
                ++pos_;
                continue;
            }
            skip_all();
            expect(']');
            return arr;
        }
    }

    json inline_table() {
        expect('{');
        json t = json::object();
        skip_ws();
        if (peek() == '}') {
            ++pos_;
            return t;
        }
        for (;;) {
            skip_ws();
            auto k = key();
            skip_ws();
            expect('=');
            skip_ws();
            t[k] = value();
            skip_ws();
            if (peek() == ',') {
                ++pos_;
                continue;
            }
            expect('}');
            return t;
        }
    }

    json number() {
        const auto start = pos_;
        while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '.' ||
                          peek() == '+' || peek() == '-')) {
            ++pos_;
        }
        std::string text;
        for (char c : s_.substr(start, pos_ - start)) {
            if (c != '_') text += c;
        }
        if (text.empty()) fail("expected a value");
        if (text == "inf" || text == "+inf") return std::numeric_limits<double>::infinity();
        if (text == "-inf") return -std::numeric_limits<double>::infinity();
        if (text == "nan" || text == "+nan" || text == "-nan") return std::numeric_limits<double>::quiet_NaN();
        const bool is_float = text.find_first_of(".eE") != std::string::npos && text.rfind("0x", 0) != 0;
        const char* b = text.data() + (text[0] == '+' ? 1 : 0);
        const char* e = text.data() + text.size();
        if (is_float) {
            double d = 0;
            auto [p, ec] = std::from_chars(b, e, d);
            if (ec != std::errc() || p != e) fail(fmt::format("bad number \"{}\"", text));
            return d;
        }
        int base = 10;
        if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'o' || text[1] == 'b')) {
            base = text[1] == 'x' ? 16 : text[1] == 'o' ? 8 : 2;
            b += 2;
        }
        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(b, e, v, base);
        if (ec != std::errc() || p != e) fail(fmt::format("bad number \"{}\"", text));
        return v;
    }

    std::string_view s_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
};

}  // namespace

json parse(std::string_view text) { return Reader(text).run(); }

}  // namespace syntaxeval::toml
