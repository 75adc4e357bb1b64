#include "dq/sql/lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "dq/error.hpp"
#include "dq/text.hpp"

namespace dq::sql {

namespace {

bool is_ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool is_ident_char(unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '$' || c >= 0x80;
}

[[noreturn]] void fail(std::string_view what, std::size_t offset) {
    throw Error(ErrorCode::sql_parse_failure,
                std::string(what) + " at offset " + std::to_string(offset));
}

}  // namespace

bool is_reserved(std::string_view w) {
    static constexpr std::array<std::string_view, 62> kReserved = {
        "ALL",      "AND",     "AS",       "ASC",      "BETWEEN", "BY",        "CASE",
        "CROSS",    "DESC",    "DISTINCT", "ELSE",     "END",     "EXCEPT",    "EXISTS",
        "FROM",     "FULL",    "GROUP",    "HAVING",   "IN",      "INNER",     "INTERSECT",
        "INTO",     "IS",      "JOIN",     "LEFT",     "LIKE",    "LIMIT",     "NATURAL",
        "NOT",      "NULL",    "OFFSET",   "ON",       "OR",      "ORDER",     "OUTER",
        "RIGHT",    "SELECT",  "THEN",     "UNION",    "USING",   "WHEN",      "WHERE",
        "WITH",     "WINDOW",  "GLOB",     "REGEXP",   "ESCAPE",  "COLLATE",   "INSERT",
        "UPDATE",   "DELETE",  "DROP",     "CREATE",   "ALTER",   "VALUES",    "SET",
        "FETCH",    "QUALIFY", "RLIKE",    "STRAIGHT_JOIN", "MINUS", "RETURNING"};
    return std::find(kReserved.begin(), kReserved.end(), w) != kReserved.end();
}

std::vector<Token> tokenize(std::string_view src, bool stop_at_semicolon) {
    std::vector<Token> out;
    std::size_t i = 0;
    const std::size_t n = src.size();
    int depth = 0;

    const auto push = [&](TokenKind kind, std::string textv, std::size_t start) {
        Token t;
        t.kind = kind;
        t.text = std::move(textv);
        if (kind == TokenKind::identifier) t.upper = text::to_upper(t.text);
        t.offset = start;
        t.length = i - start;
        out.push_back(std::move(t));
    };

    while (i < n) {
        const unsigned char c = static_cast<unsigned char>(src[i]);
        if (std::isspace(c)) {
            ++i;
            continue;
        }
        if (c == '-' && i + 1 < n && src[i + 1] == '-') {
            while (i < n && src[i] != '\n') ++i;
            continue;
        }
        if (c == '#') {
            while (i < n && src[i] != '\n') ++i;
            continue;
        }
        if (c == '/' && i + 1 < n && src[i + 1] == '*') {
            const auto close = src.find("*/", i + 2);
            if (close == std::string_view::npos) fail("unterminated comment", i);
            i = close + 2;
            continue;
        }
        const std::size_t start = i;
        // Blob literal x'ABCD'.
        if ((c == 'x' || c == 'X') && i + 1 < n && src[i + 1] == '\'') {
            const auto close = src.find('\'', i + 2);
            if (close == std::string_view::npos) fail("unterminated blob literal", i);
            i = close + 1;
            push(TokenKind::string, std::string(src.substr(start, i - start)), start);
            out.back().kind = TokenKind::number;  // treated as an opaque literal
            continue;
        }
        if (is_ident_start(c)) {
            while (i < n && is_ident_char(static_cast<unsigned char>(src[i]))) ++i;
            push(TokenKind::identifier, std::string(src.substr(start, i - start)), start);
            continue;
        }
        if (std::isdigit(c) || (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
            if (c == '0' && i + 1 < n && (src[i + 1] == 'x' || src[i + 1] == 'X')) {
                i += 2;
                while (i < n && std::isxdigit(static_cast<unsigned char>(src[i]))) ++i;
            } else {
                while (i < n && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
                if (i < n && src[i] == '.') {
                    ++i;
                    while (i < n && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
                }
                if (i < n && (src[i] == 'e' || src[i] == 'E')) {
                    std::size_t j = i + 1;
                    if (j < n && (src[j] == '+' || src[j] == '-')) ++j;
                    if (j < n && std::isdigit(static_cast<unsigned char>(src[j]))) {
                        i = j;
                        while (i < n && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
                    }
                }
            }
            if (i < n && is_ident_start(static_cast<unsigned char>(src[i]))) {
                // 1abc is an identifier in MySQL; keep it simple and treat as one word.
                while (i < n && is_ident_char(static_cast<unsigned char>(src[i]))) ++i;
                push(TokenKind::identifier, std::string(src.substr(start, i - start)), start);
                continue;
            }
            push(TokenKind::number, std::string(src.substr(start, i - start)), start);
            continue;
        }
        if (c == '\'' || c == '"' || c == '`' || c == '[') {
            const char close = c == '[' ? ']' : static_cast<char>(c);
            std::string value;
            ++i;
            bool closed = false;
            while (i < n) {
                if (src[i] == close) {
                    if (close != ']' && i + 1 < n && src[i + 1] == close) {
                        value += close;
                        i += 2;
                        continue;
                    }
                    ++i;
                    closed = true;
                    break;
                }
                if (src[i] == '\\' && c == '\'' && i + 1 < n) {
                    // MySQL-style backslash escapes inside string literals.
                    value += src[i + 1];
                    i += 2;
                    continue;
                }
                value += src[i++];
            }
            if (!closed) fail("unterminated quoted literal", start);
            push(c == '\'' ? TokenKind::string : TokenKind::quoted_identifier, std::move(value),
                 start);
            continue;
        }
        if (c == '?' || ((c == ':' || c == '@' || c == '$') && i + 1 < n &&
                         is_ident_char(static_cast<unsigned char>(src[i + 1])))) {
            ++i;
            if (c == '@' && i < n && src[i] == '@') ++i;
            while (i < n && is_ident_char(static_cast<unsigned char>(src[i]))) ++i;
            push(TokenKind::parameter, std::string(src.substr(start, i - start)), start);
            continue;
        }
        static constexpr std::array<std::string_view, 11> kTwo = {
            "<=", ">=", "<>", "!=", "==", "||", "<<", ">>", "::", "->", "&&"};
        if (src.substr(i, 3) == "<=>") {
            i += 3;
            push(TokenKind::symbol, "<=>", start);
            continue;
        }
        bool matched = false;
        for (const auto op : kTwo) {
            if (src.substr(i, 2) == op) {
                i += 2;
                push(TokenKind::symbol, std::string(op), start);
                matched = true;
                break;
            }
        }
        if (matched) continue;
        if (std::string_view("(),.;*+-/%<>=|&~!^:").find(static_cast<char>(c)) !=
            std::string_view::npos) {
            ++i;
            push(TokenKind::symbol, std::string(1, static_cast<char>(c)), start);
            if (c == '(') ++depth;
            if (c == ')') --depth;
            if (c == ';' && stop_at_semicolon && depth <= 0) return out;
            continue;
        }
        fail(std::string("unexpected character '") + static_cast<char>(c) + "'", i);
    }
    return out;
}

}  // namespace dq::sql
