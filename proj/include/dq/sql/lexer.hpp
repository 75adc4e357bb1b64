#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace dq::sql {

enum class TokenKind {
    identifier,         // bare word; keywords are identifiers too
    quoted_identifier,  // "x", `x`, [x]
    string,             // 'x' (also x'..' blobs)
    number,
    parameter,          // ?, ?1, :name, @name, $1
    symbol,             // operators and punctuation
    end,
};

struct Token {
    TokenKind kind = TokenKind::end;
    std::string text;       // identifier/quoted: unquoted name; string: unescaped value; else raw
    std::string upper;      // uppercased text for bare identifiers (keyword matching)
    std::size_t offset = 0; // byte offset in the source
    std::size_t length = 0;

    bool is_word(std::string_view upper_word) const {
        return kind == TokenKind::identifier && upper == upper_word;
    }
    bool is_symbol(std::string_view sym) const {
        return kind == TokenKind::symbol && text == sym;
    }
};

// Tokenizes `source` until end of input or, when `stop_at_semicolon` is
// set, through the first top-level `;` (which is emitted as a symbol token).
// Comments (`--`, `#`, `/* */`) are skipped. Throws Error(sql_parse_failure)
// on unterminated literals or comments.
std::vector<Token> tokenize(std::string_view source, bool stop_at_semicolon = false);

// True for words the parser treats as reserved (never accepted as an
// implicit alias).
bool is_reserved(std::string_view upper_word);

}  // namespace dq::sql
