#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace dq::sql {

struct Query;

enum class ExprKind {
    column,     // [qualifier.]name
    star,       // * or qualifier.*
    literal,
    parameter,
    unary,      // text: "-", "+", "~", "NOT"
    binary,     // text: operator, upper-cased for word operators (AND, OR, IS, ...)
    function,   // text: function name as written; args; distinct; window
    case_when,  // args: [operand?] (when, then)* [else?]
    cast,       // args[0]; text: target type
    subquery,   // scalar subquery
    exists,     // negated for NOT EXISTS
    in,         // args[0] IN (args[1..]) or subquery
    between,    // args: value, low, high
    like,       // text: LIKE/GLOB/REGEXP/MATCH/RLIKE; args: value, pattern[, escape]
    is_null,    // negated for IS NOT NULL / NOTNULL
    tuple,      // (a, b, ...)
    collate,    // args[0]; text: collation
};

enum class LiteralKind { integer, real, string, null, boolean, blob };

struct Expr {
    ExprKind kind = ExprKind::literal;
    std::string text;
    std::string qualifier;
    LiteralKind literal = LiteralKind::null;
    bool negated = false;
    bool distinct = false;
    bool has_operand = false;  // case_when
    bool has_else = false;     // case_when
    std::vector<Expr> args;
    std::shared_ptr<const Query> subquery;
    std::string window;  // raw OVER clause body, if any

    static Expr column(std::string qualifier, std::string name) {
        Expr e;
        e.kind = ExprKind::column;
        e.qualifier = std::move(qualifier);
        e.text = std::move(name);
        return e;
    }
};

struct TableRef {
    std::string schema;  // optional database/schema qualifier
    std::string name;    // empty for derived tables
    std::string alias;
    std::shared_ptr<const Query> subquery;

    bool is_derived() const { return subquery != nullptr; }
    // Name the rest of the query uses to refer to this table.
    const std::string& exposed_name() const { return alias.empty() ? name : alias; }
};

struct Join {
    std::string kind;  // "," "JOIN" "INNER JOIN" "LEFT JOIN" ... as normalized upper text
    TableRef table;
    std::optional<Expr> on;
    std::vector<std::string> using_columns;
};

struct FromClause {
    TableRef first;
    std::vector<Join> joins;
};

struct SelectItem {
    Expr expr;
    std::string alias;
};

struct OrderItem {
    Expr expr;
    bool descending = false;
};

struct SelectCore {
    bool distinct = false;
    std::vector<SelectItem> items;
    std::optional<FromClause> from;
    std::optional<Expr> where;
    std::vector<Expr> group_by;
    std::optional<Expr> having;
    std::vector<std::string> into;  // SELECT ... INTO targets (a write in most dialects)
    // Set when the core is a parenthesized query inside a compound.
    std::shared_ptr<const Query> parenthesized;
};

struct Compound {
    std::string op;  // UNION, INTERSECT, EXCEPT
    bool all = false;
    SelectCore core;
};

struct CommonTableExpr {
    std::string name;
    std::vector<std::string> columns;
    std::shared_ptr<const Query> query;
};

struct Query {
    bool recursive = false;
    std::vector<CommonTableExpr> ctes;
    SelectCore core;
    std::vector<Compound> compounds;
    std::vector<OrderItem> order_by;
    std::optional<Expr> limit;
    std::optional<Expr> offset;
};

}  // namespace dq::sql
