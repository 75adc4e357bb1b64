#include "dq/sql/printer.hpp"

#include <cctype>

#include "dq/sql/lexer.hpp"
#include "dq/text.hpp"

namespace dq::sql {

namespace {

int precedence(const Expr& e) {
    switch (e.kind) {
    case ExprKind::binary: {
        const auto& op = e.text;
        if (op == "OR" || op == "XOR") return 1;
        if (op == "AND") return 2;
        if (op == "|" || op == "&" || op == "<<" || op == ">>" || op == "^") return 5;
        if (op == "+" || op == "-") return 6;
        if (op == "*" || op == "/" || op == "%" || op == "DIV" || op == "MOD") return 7;
        if (op == "||" || op == "->") return 8;
        return 4;  // comparisons, IS, quantified comparisons
    }
    case ExprKind::unary: return e.text == "NOT" ? 3 : 9;
    case ExprKind::in:
    case ExprKind::between:
    case ExprKind::like:
    case ExprKind::is_null: return 4;
    default: return 10;
    }
}

class Printer {
public:
    explicit Printer(const PrintOptions& opts) : opts_(opts) {}

    std::string ident(std::string_view name) const {
        return opts_.lowercase_identifiers ? quote_identifier(text::to_lower(name))
                                           : quote_identifier(name);
    }

    std::string expr(const Expr& e) const {
        switch (e.kind) {
        case ExprKind::column:
            if (opts_.column_renderer) return opts_.column_renderer(e);
            return e.qualifier.empty() ? ident(e.text) : ident(e.qualifier) + "." + ident(e.text);
        case ExprKind::star:
            return e.qualifier.empty() ? "*" : ident(e.qualifier) + ".*";
        case ExprKind::literal:
            if (e.literal == LiteralKind::string) return quote_literal(e.text);
            return e.text;
        case ExprKind::parameter: return e.text;
        case ExprKind::unary: {
            const std::string inner = child(e.args[0], precedence(e), false);
            return e.text == "NOT" ? "NOT " + inner : e.text + inner;
        }
        case ExprKind::binary:
            return child(e.args[0], precedence(e), false) + " " + e.text + " " +
                   child(e.args[1], precedence(e), true);
        case ExprKind::function: {
            std::string name = opts_.lowercase_identifiers ? text::to_lower(e.text) : e.text;
            if (text::istarts_with(e.text, "INTERVAL ")) return "INTERVAL " + expr(e.args[0]) + e.text.substr(8);
            if (e.text == "CURRENT_DATE" || e.text == "CURRENT_TIME" ||
                e.text == "CURRENT_TIMESTAMP")
                return e.text;
            std::string out = name + "(";
            if (e.distinct) out += "DISTINCT ";
            for (std::size_t i = 0; i < e.args.size(); ++i) {
                if (i) out += ", ";
                out += expr(e.args[i]);
            }
            out += ")";
            if (!e.window.empty()) out += " OVER " + e.window;
            return out;
        }
        case ExprKind::case_when: {
            std::string out = "CASE";
            std::size_t i = 0;
            if (e.has_operand) out += " " + expr(e.args[i++]);
            const std::size_t pairs_end = e.has_else ? e.args.size() - 1 : e.args.size();
            for (; i + 1 < pairs_end; i += 2)
                out += " WHEN " + expr(e.args[i]) + " THEN " + expr(e.args[i + 1]);
            if (e.has_else) out += " ELSE " + expr(e.args.back());
            return out + " END";
        }
        case ExprKind::cast: return "CAST(" + expr(e.args[0]) + " AS " + e.text + ")";
        case ExprKind::subquery: return "(" + query(*e.subquery) + ")";
        case ExprKind::exists:
            return std::string(e.negated ? "NOT " : "") + "EXISTS (" + query(*e.subquery) + ")";
        case ExprKind::in: {
            std::string out = child(e.args[0], 4, false) + (e.negated ? " NOT IN (" : " IN (");
            if (e.subquery) {
                out += query(*e.subquery);
            } else {
                for (std::size_t i = 1; i < e.args.size(); ++i) {
                    if (i > 1) out += ", ";
                    out += expr(e.args[i]);
                }
            }
            return out + ")";
        }
        case ExprKind::between:
            return child(e.args[0], 4, false) + (e.negated ? " NOT BETWEEN " : " BETWEEN ") +
                   child(e.args[1], 5, false) + " AND " + child(e.args[2], 5, false);
        case ExprKind::like: {
            std::string out = child(e.args[0], 4, false) + (e.negated ? " NOT " : " ") + e.text +
                              " " + child(e.args[1], 5, false);
            if (e.args.size() > 2) out += " ESCAPE " + expr(e.args[2]);
            return out;
        }
        case ExprKind::is_null:
            return child(e.args[0], 4, false) + (e.negated ? " IS NOT NULL" : " IS NULL");
        case ExprKind::tuple: {
            std::string out = "(";
            for (std::size_t i = 0; i < e.args.size(); ++i) {
                if (i) out += ", ";
                out += expr(e.args[i]);
            }
            return out + ")";
        }
        case ExprKind::collate: return child(e.args[0], 9, false) + " COLLATE " + e.text;
        }
        return {};
    }

    std::string child(const Expr& c, int parent_prec, bool right) const {
        const int p = precedence(c);
        const std::string s = expr(c);
        if (p < parent_prec || (right && p == parent_prec && p >= 4 && p != 10)) return "(" + s + ")";
        return s;
    }

    std::string table_ref(const TableRef& t) const {
        std::string out;
        if (t.subquery) {
            out = "(" + query(*t.subquery) + ")";
        } else {
            if (!t.schema.empty()) out = ident(t.schema) + ".";
            out += ident(t.name);
        }
        if (!t.alias.empty()) out += " AS " + ident(t.alias);
        return out;
    }

    std::string core(const SelectCore& c) const {
        if (c.parenthesized) return "(" + query(*c.parenthesized) + ")";
        std::string out = "SELECT ";
        if (c.distinct) out += "DISTINCT ";
        for (std::size_t i = 0; i < c.items.size(); ++i) {
            if (i) out += ", ";
            out += expr(c.items[i].expr);
            if (!c.items[i].alias.empty()) out += " AS " + ident(c.items[i].alias);
        }
        if (!c.into.empty()) out += " INTO " + text::join(c.into, " ");
        if (c.from) {
            out += " FROM " + table_ref(c.from->first);
            for (const auto& j : c.from->joins) {
                out += j.kind == "," ? ", " : " " + j.kind + " ";
                out += table_ref(j.table);
                if (j.on) out += " ON " + expr(*j.on);
                if (!j.using_columns.empty()) {
                    out += " USING (";
                    for (std::size_t i = 0; i < j.using_columns.size(); ++i) {
                        if (i) out += ", ";
                        out += ident(j.using_columns[i]);
                    }
                    out += ")";
                }
            }
        }
        if (c.where) out += " WHERE " + expr(*c.where);
        if (!c.group_by.empty()) {
            out += " GROUP BY ";
            for (std::size_t i = 0; i < c.group_by.size(); ++i) {
                if (i) out += ", ";
                out += expr(c.group_by[i]);
            }
        }
        if (c.having) out += " HAVING " + expr(*c.having);
        return out;
    }

    std::string query(const Query& q) const {
        std::string out;
        if (!q.ctes.empty()) {
            out = q.recursive ? "WITH RECURSIVE " : "WITH ";
            for (std::size_t i = 0; i < q.ctes.size(); ++i) {
                const auto& cte = q.ctes[i];
                if (i) out += ", ";
                out += ident(cte.name);
                if (!cte.columns.empty()) {
                    out += "(";
                    for (std::size_t k = 0; k < cte.columns.size(); ++k) {
                        if (k) out += ", ";
                        out += ident(cte.columns[k]);
                    }
                    out += ")";
                }
                out += " AS (" + query(*cte.query) + ")";
            }
            out += " ";
        }
        out += core(q.core);
        for (const auto& c : q.compounds) {
            out += " " + c.op + (c.all ? " ALL " : " ") + core(c.core);
        }
        if (!q.order_by.empty()) {
            out += " ORDER BY ";
            for (std::size_t i = 0; i < q.order_by.size(); ++i) {
                if (i) out += ", ";
                out += expr(q.order_by[i].expr);
                if (q.order_by[i].descending) out += " DESC";
            }
        }
        if (q.limit) out += " LIMIT " + expr(*q.limit);
        if (q.offset) out += " OFFSET " + expr(*q.offset);
        return out;
    }

private:
    const PrintOptions& opts_;
};

}  // namespace

std::string quote_identifier(std::string_view name) {
    bool plain = !name.empty() &&
                 (std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_');
    for (char c : name) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) plain = false;
    }
    if (plain && !is_reserved(text::to_upper(name))) return std::string(name);
    std::string out = "\"";
    for (char c : name) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string quote_literal(std::string_view value) {
    std::string out = "'";
    for (char c : value) {
        if (c == '\'') out += '\'';
        out += c;
    }
    return out + "'";
}

std::string to_sql(const Expr& expr, const PrintOptions& options) {
    return Printer(options).expr(expr);
}

std::string to_sql(const Query& query, const PrintOptions& options) {
    return Printer(options).query(query);
}

}  // namespace dq::sql
