#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "dq/error.hpp"
#include "dq/sql/ast.hpp"
#include "dq/sql/lexer.hpp"

namespace dq::sql {

// Raised for any syntax error. `forbidden_verb` is set when a write verb
// (INSERT, DELETE, ...) appears where a query body was expected, e.g. the
// final body of a WITH statement.
class ParseError : public Error {
public:
    ParseError(const std::string& message, Token near, std::string forbidden_verb = {})
        : Error(ErrorCode::sql_parse_failure, message, near.text),
          near_(std::move(near)),
          forbidden_verb_(std::move(forbidden_verb)) {}

    const Token& near_token() const noexcept { return near_; }
    const std::string& forbidden_verb() const noexcept { return forbidden_verb_; }

private:
    Token near_;
    std::string forbidden_verb_;
};

// Verbs that begin a data-modification, definition, or session-altering
// statement.
bool is_write_verb(std::string_view upper_word);

// Parses exactly one SELECT/WITH query; an optional trailing `;` is allowed.
Query parse_query(std::string_view sql);

// Parses an already tokenized query spanning all of `tokens` (a trailing `;`
// is tolerated).
Query parse_query_tokens(const std::vector<Token>& tokens);

// Parses a standalone boolean/scalar expression.
Expr parse_expression(std::string_view sql);

}  // namespace dq::sql
