#pragma once

#include <functional>
#include <string>
#include <string_view>

#include "dq/sql/ast.hpp"

namespace dq::sql {

struct PrintOptions {
    // Lowercase every identifier (tables, columns, aliases, function names).
    bool lowercase_identifiers = false;
    // When set, replaces the default rendering of column references.
    std::function<std::string(const Expr&)> column_renderer;
};

// Quotes `name` with double quotes when it is not a plain identifier or is
// a reserved word; otherwise returns it unchanged.
std::string quote_identifier(std::string_view name);

// Renders a SQL string literal with embedded quotes doubled.
std::string quote_literal(std::string_view value);

std::string to_sql(const Expr& expr, const PrintOptions& options = {});
std::string to_sql(const Query& query, const PrintOptions& options = {});

}  // namespace dq::sql
