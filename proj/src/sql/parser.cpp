#include "dq/sql/parser.hpp"

#include <algorithm>
#include <array>

#include "dq/text.hpp"

namespace dq::sql {

bool is_write_verb(std::string_view w) {
    static constexpr std::array<std::string_view, 30> kVerbs = {
        "INSERT", "UPDATE",  "DELETE",   "REPLACE", "MERGE",  "UPSERT", "DROP",   "CREATE",
        "ALTER",  "TRUNCATE", "RENAME",  "GRANT",   "REVOKE", "ATTACH", "DETACH", "VACUUM",
        "REINDEX", "PRAGMA", "LOAD",     "CALL",    "EXEC",   "EXECUTE", "LOCK",  "UNLOCK",
        "HANDLER", "COPY",   "COMMENT",  "ANALYZE", "OPTIMIZE", "SET"};
    return std::find(kVerbs.begin(), kVerbs.end(), w) != kVerbs.end();
}

namespace {

class Parser {
public:
    explicit Parser(const std::vector<Token>& tokens) : toks_(tokens) {
        end_.kind = TokenKind::end;
        end_.offset = tokens.empty() ? 0 : tokens.back().offset + tokens.back().length;
    }

    Query parse_full_query() {
        Query q = parse_query();
        accept_symbol(";");
        if (!at_end()) fail("unexpected trailing token");
        return q;
    }

    Expr parse_full_expression() {
        Expr e = parse_expr();
        if (!at_end()) fail("unexpected trailing token");
        return e;
    }

private:
    const std::vector<Token>& toks_;
    std::size_t pos_ = 0;
    Token end_;

    const Token& peek(std::size_t k = 0) const {
        return pos_ + k < toks_.size() ? toks_[pos_ + k] : end_;
    }
    bool at_end() const { return pos_ >= toks_.size(); }
    const Token& advance() {
        const Token& t = peek();
        if (!at_end()) ++pos_;
        return t;
    }

    [[noreturn]] void fail(const std::string& what, std::string forbidden = {}) const {
        const Token& t = peek();
        std::string near = t.kind == TokenKind::end ? "end of input" : "'" + t.text + "'";
        throw ParseError(what + " near " + near, t, std::move(forbidden));
    }

    bool is_word(std::string_view w, std::size_t k = 0) const { return peek(k).is_word(w); }
    bool is_symbol(std::string_view s, std::size_t k = 0) const { return peek(k).is_symbol(s); }

    bool accept_word(std::string_view w) {
        if (!is_word(w)) return false;
        ++pos_;
        return true;
    }
    bool accept_symbol(std::string_view s) {
        if (!is_symbol(s)) return false;
        ++pos_;
        return true;
    }
    void expect_word(std::string_view w) {
        if (!accept_word(w)) fail("expected " + std::string(w));
    }
    void expect_symbol(std::string_view s) {
        if (!accept_symbol(s)) fail("expected '" + std::string(s) + "'");
    }

    // Any identifier-like name: bare (non-reserved unless allow_reserved) or quoted.
    std::string expect_name(bool allow_reserved = false) {
        const Token& t = peek();
        if (t.kind == TokenKind::quoted_identifier ||
            (t.kind == TokenKind::identifier && (allow_reserved || !is_reserved(t.upper)))) {
            ++pos_;
            return t.text;
        }
        fail("expected identifier");
    }

    // ---- queries -------------------------------------------------------

    void reject_write_head() const {
        const Token& t = peek();
        if (t.kind == TokenKind::identifier && is_write_verb(t.upper) && t.upper != "SET" &&
            !is_symbol("(", 1))
            fail("write statement where a query was expected", t.upper);
    }

    Query parse_query() {
        Query q;
        if (accept_word("WITH")) {
            q.recursive = accept_word("RECURSIVE");
            do {
                CommonTableExpr cte;
                cte.name = expect_name();
                if (accept_symbol("(")) {
                    do cte.columns.push_back(expect_name(true));
                    while (accept_symbol(","));
                    expect_symbol(")");
                }
                expect_word("AS");
                if (accept_word("NOT")) expect_word("MATERIALIZED");
                else accept_word("MATERIALIZED");
                expect_symbol("(");
                reject_write_head();
                cte.query = std::make_shared<const Query>(parse_query());
                expect_symbol(")");
                q.ctes.push_back(std::move(cte));
            } while (accept_symbol(","));
            reject_write_head();
        }
        q.core = parse_core();
        while (true) {
            Compound c;
            if (accept_word("UNION")) {
                c.op = "UNION";
                c.all = accept_word("ALL");
                if (!c.all) accept_word("DISTINCT");
            } else if (accept_word("INTERSECT")) {
                c.op = "INTERSECT";
                c.all = accept_word("ALL");
            } else if (accept_word("EXCEPT") || accept_word("MINUS")) {
                c.op = "EXCEPT";
                c.all = accept_word("ALL");
            } else {
                break;
            }
            c.core = parse_core();
            q.compounds.push_back(std::move(c));
        }
        if (accept_word("ORDER")) {
            expect_word("BY");
            q.order_by = parse_order_list();
        }
        if (accept_word("LIMIT")) {
            Expr first = parse_expr();
            if (accept_symbol(",")) {
                q.offset = std::move(first);
                q.limit = parse_expr();
            } else {
                q.limit = std::move(first);
                if (accept_word("OFFSET")) q.offset = parse_expr();
            }
        } else if (accept_word("OFFSET")) {
            q.offset = parse_expr();
            if (!accept_word("ROWS")) accept_word("ROW");
            if (accept_word("FETCH")) parse_fetch(q);
        } else if (accept_word("FETCH")) {
            parse_fetch(q);
        }
        if (is_word("FOR") && (is_word("UPDATE", 1) || is_word("SHARE", 1))) {
            // Row locking clause: read-only but session-affecting; reject.
            fail("locking clause is not allowed", "FOR " + peek(1).upper);
        }
        return q;
    }

    void parse_fetch(Query& q) {
        if (!accept_word("FIRST")) expect_word("NEXT");
        q.limit = parse_expr();
        if (!accept_word("ROWS")) expect_word("ROW");
        expect_word("ONLY");
    }

    std::vector<OrderItem> parse_order_list() {
        std::vector<OrderItem> items;
        do {
            OrderItem item;
            item.expr = parse_expr();
            if (accept_word("DESC")) item.descending = true;
            else accept_word("ASC");
            if (accept_word("NULLS")) {
                if (!accept_word("FIRST")) expect_word("LAST");
            }
            items.push_back(std::move(item));
        } while (accept_symbol(","));
        return items;
    }

    SelectCore parse_core() {
        SelectCore core;
        if (is_symbol("(")) {
            ++pos_;
            core.parenthesized = std::make_shared<const Query>(parse_query());
            expect_symbol(")");
            return core;
        }
        reject_write_head();
        if (!accept_word("SELECT")) fail("expected SELECT");
        if (accept_word("DISTINCT") || accept_word("DISTINCTROW")) core.distinct = true;
        else accept_word("ALL");
        while (accept_word("SQL_CALC_FOUND_ROWS") || accept_word("SQL_NO_CACHE") ||
               accept_word("STRAIGHT_JOIN") || accept_word("HIGH_PRIORITY")) {
        }
        do {
            core.items.push_back(parse_select_item());
        } while (accept_symbol(","));
        if (accept_word("INTO")) {
            // Consume the targets; the sanitizer rejects any INTO.
            while (!at_end() && !is_word("FROM") && !is_symbol(";") && !is_symbol(")")) {
                core.into.push_back(advance().text);
                if (is_word("FROM")) break;
            }
            if (core.into.empty()) fail("expected INTO target");
        }
        if (accept_word("FROM")) core.from = parse_from();
        if (accept_word("WHERE")) core.where = parse_expr();
        if (accept_word("GROUP")) {
            expect_word("BY");
            do core.group_by.push_back(parse_expr());
            while (accept_symbol(","));
            if (accept_word("WITH")) expect_word("ROLLUP");
        }
        if (accept_word("HAVING")) core.having = parse_expr();
        if (accept_word("WINDOW")) {
            do {
                expect_name();
                expect_word("AS");
                skip_balanced();
            } while (accept_symbol(","));
        }
        return core;
    }

    SelectItem parse_select_item() {
        SelectItem item;
        if (is_symbol("*")) {
            ++pos_;
            item.expr.kind = ExprKind::star;
            return item;
        }
        item.expr = parse_expr();
        item.alias = parse_optional_alias();
        return item;
    }

    std::string parse_optional_alias() {
        if (accept_word("AS")) {
            if (peek().kind == TokenKind::string) return advance().text;
            return expect_name(true);
        }
        const Token& t = peek();
        if (t.kind == TokenKind::quoted_identifier) return advance().text;
        if (t.kind == TokenKind::string) return advance().text;
        if (t.kind == TokenKind::identifier && !is_reserved(t.upper) && !is_join_word(t.upper))
            return advance().text;
        return {};
    }

    static bool is_join_word(std::string_view w) {
        return w == "LEFT" || w == "RIGHT" || w == "INNER" || w == "OUTER" || w == "CROSS" ||
               w == "FULL" || w == "NATURAL" || w == "JOIN" || w == "ON" || w == "USING" ||
               w == "LIMIT" || w == "OFFSET" || w == "WINDOW" || w == "FETCH" || w == "FOR" ||
               w == "STRAIGHT_JOIN" || w == "USE" || w == "FORCE" || w == "IGNORE" ||
               w == "INDEXED";
    }

    FromClause parse_from() {
        FromClause from;
        from.first = parse_table_ref();
        while (true) {
            Join j;
            if (accept_symbol(",")) {
                j.kind = ",";
            } else {
                std::string kind;
                if (accept_word("NATURAL")) kind = "NATURAL ";
                if (accept_word("LEFT")) {
                    kind += "LEFT ";
                    accept_word("OUTER");
                } else if (accept_word("RIGHT")) {
                    kind += "RIGHT ";
                    accept_word("OUTER");
                } else if (accept_word("FULL")) {
                    kind += "FULL ";
                    accept_word("OUTER");
                } else if (accept_word("INNER")) {
                    kind += "INNER ";
                } else if (accept_word("CROSS")) {
                    kind += "CROSS ";
                }
                if (accept_word("STRAIGHT_JOIN")) {
                    kind += "JOIN";
                } else if (accept_word("JOIN")) {
                    kind += "JOIN";
                } else {
                    if (!kind.empty()) fail("expected JOIN");
                    break;
                }
                j.kind = kind;
            }
            j.table = parse_table_ref();
            if (j.kind != ",") {
                if (accept_word("ON")) {
                    j.on = parse_expr();
                } else if (accept_word("USING")) {
                    expect_symbol("(");
                    do j.using_columns.push_back(expect_name(true));
                    while (accept_symbol(","));
                    expect_symbol(")");
                }
            }
            from.joins.push_back(std::move(j));
        }
        return from;
    }

    TableRef parse_table_ref() {
        TableRef ref;
        if (accept_symbol("(")) {
            if (is_word("SELECT") || is_word("WITH") || is_symbol("(")) {
                ref.subquery = std::make_shared<const Query>(parse_query());
                expect_symbol(")");
            } else {
                fail("parenthesized join lists are not supported");
            }
            ref.alias = parse_optional_alias();
            return ref;
        }
        std::string name = expect_name();
        if (accept_symbol(".")) {
            ref.schema = std::move(name);
            name = expect_name(true);
        }
        ref.name = std::move(name);
        if (is_symbol("(")) fail("table-valued functions are not supported");
        ref.alias = parse_optional_alias();
        // Index hints: USE/FORCE/IGNORE INDEX (...), INDEXED BY x, NOT INDEXED.
        while (is_word("USE") || is_word("FORCE") || is_word("IGNORE")) {
            ++pos_;
            if (!accept_word("INDEX")) expect_word("KEY");
            skip_balanced();
        }
        if (accept_word("INDEXED")) {
            expect_word("BY");
            expect_name();
        }
        return ref;
    }

    // Skips a balanced parenthesized group, returning its token texts.
    std::string skip_balanced() {
        expect_symbol("(");
        int depth = 1;
        std::vector<std::string> parts;
        while (!at_end() && depth > 0) {
            const Token& t = advance();
            if (t.is_symbol("(")) ++depth;
            if (t.is_symbol(")") && --depth == 0) break;
            parts.push_back(render_token(t));
        }
        if (depth != 0) fail("unbalanced parentheses");
        return join_tokens(parts);
    }

    static std::string render_token(const Token& t) {
        switch (t.kind) {
        case TokenKind::string: {
            std::string s = "'";
            for (char c : t.text) {
                if (c == '\'') s += '\'';
                s += c;
            }
            return s + "'";
        }
        case TokenKind::quoted_identifier: return "\"" + t.text + "\"";
        default: return t.text;
        }
    }

    static std::string join_tokens(const std::vector<std::string>& parts) {
        std::string out;
        for (std::size_t i = 0; i < parts.size(); ++i) {
            const auto& p = parts[i];
            if (i > 0 && p != "," && p != ")" && p != "(" && out.back() != '(') out += ' ';
            if (i > 0 && p == "(" && !out.empty() && out.back() == ',') out += ' ';
            out += p;
        }
        return out;
    }

    // ---- expressions ---------------------------------------------------

    static Expr make_binary(std::string op, Expr lhs, Expr rhs) {
        Expr e;
        e.kind = ExprKind::binary;
        e.text = std::move(op);
        e.args.push_back(std::move(lhs));
        e.args.push_back(std::move(rhs));
        return e;
    }

    Expr parse_expr() { return parse_or(); }

    Expr parse_or() {
        Expr lhs = parse_and();
        while (accept_word("OR") || accept_word("XOR")) {
            const std::string op = toks_[pos_ - 1].upper;
            lhs = make_binary(op, std::move(lhs), parse_and());
        }
        return lhs;
    }

    Expr parse_and() {
        Expr lhs = parse_not();
        while (accept_word("AND") || accept_symbol("&&")) {
            lhs = make_binary("AND", std::move(lhs), parse_not());
        }
        return lhs;
    }

    Expr parse_not() {
        if (accept_word("NOT") || (is_symbol("!") && !is_symbol("=", 1) && accept_symbol("!"))) {
            Expr inner = parse_not();
            if (inner.kind == ExprKind::exists) {
                inner.negated = !inner.negated;
                return inner;
            }
            Expr e;
            e.kind = ExprKind::unary;
            e.text = "NOT";
            e.args.push_back(std::move(inner));
            return e;
        }
        return parse_comparison();
    }

    Expr parse_comparison() {
        Expr lhs = parse_bitwise();
        while (true) {
            const Token& t = peek();
            if (t.kind == TokenKind::symbol &&
                (t.text == "=" || t.text == "==" || t.text == "!=" || t.text == "<>" ||
                 t.text == "<" || t.text == "<=" || t.text == ">" || t.text == ">=" ||
                 t.text == "<=>")) {
                std::string op = t.text == "==" ? "=" : t.text;
                ++pos_;
                if (is_word("ANY") || is_word("ALL") || is_word("SOME")) {
                    // x > ALL (subquery): keep the quantifier in the operator.
                    op += " " + advance().upper;
                }
                lhs = make_binary(op, std::move(lhs), parse_bitwise());
                continue;
            }
            if (is_word("IS")) {
                ++pos_;
                const bool neg = accept_word("NOT");
                if (accept_word("NULL")) {
                    Expr e;
                    e.kind = ExprKind::is_null;
                    e.negated = neg;
                    e.args.push_back(std::move(lhs));
                    lhs = std::move(e);
                    continue;
                }
                std::string op = neg ? "IS NOT" : "IS";
                if (accept_word("DISTINCT")) {
                    expect_word("FROM");
                    op += " DISTINCT FROM";
                }
                lhs = make_binary(op, std::move(lhs), parse_bitwise());
                continue;
            }
            if (accept_word("ISNULL") || accept_word("NOTNULL")) {
                Expr e;
                e.kind = ExprKind::is_null;
                e.negated = toks_[pos_ - 1].upper == "NOTNULL";
                e.args.push_back(std::move(lhs));
                lhs = std::move(e);
                continue;
            }
            bool neg = false;
            if (is_word("NOT") &&
                (is_word("IN", 1) || is_word("BETWEEN", 1) || is_word("LIKE", 1) ||
                 is_word("GLOB", 1) || is_word("REGEXP", 1) || is_word("RLIKE", 1) ||
                 is_word("MATCH", 1) || is_word("NULL", 1))) {
                ++pos_;
                neg = true;
            }
            if (neg && accept_word("NULL")) {
                Expr e;
                e.kind = ExprKind::is_null;
                e.negated = true;
                e.args.push_back(std::move(lhs));
                lhs = std::move(e);
                continue;
            }
            if (accept_word("IN")) {
                Expr e;
                e.kind = ExprKind::in;
                e.negated = neg;
                e.args.push_back(std::move(lhs));
                expect_symbol("(");
                if (is_word("SELECT") || is_word("WITH")) {
                    e.subquery = std::make_shared<const Query>(parse_query());
                } else if (!is_symbol(")")) {
                    do e.args.push_back(parse_expr());
                    while (accept_symbol(","));
                }
                expect_symbol(")");
                lhs = std::move(e);
                continue;
            }
            if (accept_word("BETWEEN")) {
                Expr e;
                e.kind = ExprKind::between;
                e.negated = neg;
                e.args.push_back(std::move(lhs));
                e.args.push_back(parse_bitwise());
                expect_word("AND");
                e.args.push_back(parse_bitwise());
                lhs = std::move(e);
                continue;
            }
            if (is_word("LIKE") || is_word("GLOB") || is_word("REGEXP") || is_word("RLIKE") ||
                is_word("MATCH")) {
                Expr e;
                e.kind = ExprKind::like;
                e.text = advance().upper;
                e.negated = neg;
                e.args.push_back(std::move(lhs));
                e.args.push_back(parse_bitwise());
                if (accept_word("ESCAPE")) e.args.push_back(parse_bitwise());
                lhs = std::move(e);
                continue;
            }
            if (neg) fail("dangling NOT");
            return lhs;
        }
    }

    Expr parse_bitwise() {
        Expr lhs = parse_additive();
        while (is_symbol("|") || is_symbol("&") || is_symbol("<<") || is_symbol(">>") ||
               is_symbol("^")) {
            const std::string op = advance().text;
            lhs = make_binary(op, std::move(lhs), parse_additive());
        }
        return lhs;
    }

    Expr parse_additive() {
        Expr lhs = parse_multiplicative();
        while (is_symbol("+") || is_symbol("-")) {
            const std::string op = advance().text;
            lhs = make_binary(op, std::move(lhs), parse_multiplicative());
        }
        return lhs;
    }

    Expr parse_multiplicative() {
        Expr lhs = parse_concat();
        while (is_symbol("*") || is_symbol("/") || is_symbol("%") || is_word("DIV") ||
               is_word("MOD")) {
            const Token& t = advance();
            const std::string op = t.kind == TokenKind::identifier ? t.upper : t.text;
            lhs = make_binary(op, std::move(lhs), parse_concat());
        }
        return lhs;
    }

    Expr parse_concat() {
        Expr lhs = parse_unary();
        while (is_symbol("||") || is_symbol("->")) {
            const std::string op = advance().text;
            lhs = make_binary(op, std::move(lhs), parse_unary());
        }
        return lhs;
    }

    Expr parse_unary() {
        if (is_symbol("-") || is_symbol("+") || is_symbol("~")) {
            const std::string op = advance().text;
            Expr inner = parse_unary();
            if (op == "-" && inner.kind == ExprKind::literal &&
                (inner.literal == LiteralKind::integer || inner.literal == LiteralKind::real) &&
                !inner.text.empty() && inner.text.front() != '-') {
                inner.text = "-" + inner.text;
                return inner;
            }
            Expr e;
            e.kind = ExprKind::unary;
            e.text = op;
            e.args.push_back(std::move(inner));
            return e;
        }
        return parse_postfix();
    }

    Expr parse_postfix() {
        Expr e = parse_primary();
        while (true) {
            if (accept_word("COLLATE")) {
                Expr c;
                c.kind = ExprKind::collate;
                c.text = expect_name(true);
                c.args.push_back(std::move(e));
                e = std::move(c);
            } else if (accept_symbol("::")) {
                Expr c;
                c.kind = ExprKind::cast;
                c.text = parse_type_name();
                c.args.push_back(std::move(e));
                e = std::move(c);
            } else {
                return e;
            }
        }
    }

    std::string parse_type_name() {
        std::vector<std::string> parts;
        while (peek().kind == TokenKind::identifier && !is_word("AS")) {
            parts.push_back(advance().text);
        }
        if (parts.empty()) fail("expected type name");
        std::string type = text::join(parts, " ");
        if (is_symbol("(")) type += "(" + skip_balanced() + ")";
        return type;
    }

    Expr parse_primary() {
        const Token& t = peek();
        switch (t.kind) {
        case TokenKind::number: {
            ++pos_;
            Expr e;
            e.kind = ExprKind::literal;
            e.text = t.text;
            if (t.text.size() > 1 && (t.text[0] == 'x' || t.text[0] == 'X'))
                e.literal = LiteralKind::blob;
            else if (t.text.find_first_of(".eE") != std::string::npos &&
                     !text::istarts_with(t.text, "0x"))
                e.literal = LiteralKind::real;
            else
                e.literal = LiteralKind::integer;
            return e;
        }
        case TokenKind::string: {
            ++pos_;
            Expr e;
            e.kind = ExprKind::literal;
            e.literal = LiteralKind::string;
            e.text = t.text;
            return e;
        }
        case TokenKind::parameter: {
            ++pos_;
            Expr e;
            e.kind = ExprKind::parameter;
            e.text = t.text;
            return e;
        }
        case TokenKind::quoted_identifier:
            return parse_name_chain();
        case TokenKind::symbol:
            if (t.text == "(") return parse_parenthesized();
            if (t.text == "*") {
                ++pos_;
                Expr e;
                e.kind = ExprKind::star;
                return e;
            }
            fail("unexpected symbol");
        case TokenKind::end:
            fail("unexpected end of input");
        case TokenKind::identifier:
            break;
        }
        const std::string& w = t.upper;
        if (w == "NULL" || w == "TRUE" || w == "FALSE") {
            ++pos_;
            Expr e;
            e.kind = ExprKind::literal;
            e.literal = w == "NULL" ? LiteralKind::null : LiteralKind::boolean;
            e.text = w;
            return e;
        }
        if (w == "CASE") return parse_case();
        if (w == "CAST" && is_symbol("(", 1)) {
            pos_ += 2;
            Expr e;
            e.kind = ExprKind::cast;
            e.args.push_back(parse_expr());
            expect_word("AS");
            e.text = parse_type_name();
            expect_symbol(")");
            return e;
        }
        if (w == "EXISTS" && is_symbol("(", 1)) {
            pos_ += 2;
            Expr e;
            e.kind = ExprKind::exists;
            e.subquery = std::make_shared<const Query>(parse_query());
            expect_symbol(")");
            return e;
        }
        if (w == "INTERVAL") {
            ++pos_;
            Expr e;
            e.kind = ExprKind::function;
            e.args.push_back(parse_additive());
            e.text = "INTERVAL " + expect_name(true);
            return e;
        }
        if (w == "CURRENT_DATE" || w == "CURRENT_TIME" || w == "CURRENT_TIMESTAMP") {
            ++pos_;
            Expr e;
            e.kind = ExprKind::function;
            e.text = w;
            e.window = "";
            if (is_symbol("(") && is_symbol(")", 1)) pos_ += 2;
            return e;
        }
        if (is_symbol("(", 1) && (!is_reserved(w) || w == "REPLACE" || w == "LEFT" ||
                                  w == "RIGHT" || w == "INSERT")) {
            return parse_function();
        }
        if (is_reserved(w)) fail("unexpected keyword");
        return parse_name_chain();
    }

    Expr parse_name_chain() {
        std::vector<std::string> parts;
        parts.push_back(advance().text);
        while (is_symbol(".")) {
            ++pos_;
            if (is_symbol("*")) {
                ++pos_;
                Expr e;
                e.kind = ExprKind::star;
                e.qualifier = parts.back();
                return e;
            }
            parts.push_back(expect_name(true));
        }
        Expr e = Expr::column(parts.size() >= 2 ? parts[parts.size() - 2] : std::string{},
                              parts.back());
        return e;
    }

    Expr parse_function() {
        Expr e;
        e.kind = ExprKind::function;
        e.text = advance().text;
        expect_symbol("(");
        if (accept_symbol("*")) {
            Expr star;
            star.kind = ExprKind::star;
            e.args.push_back(std::move(star));
        } else if (!is_symbol(")")) {
            if (accept_word("DISTINCT")) e.distinct = true;
            else accept_word("ALL");
            do e.args.push_back(parse_expr());
            while (accept_symbol(","));
            if (accept_word("ORDER")) {
                expect_word("BY");
                parse_order_list();
            }
            if (accept_word("SEPARATOR")) parse_primary();
        }
        expect_symbol(")");
        if (accept_word("FILTER")) {
            skip_balanced();
        }
        if (accept_word("OVER")) {
            if (is_symbol("("))
                e.window = "(" + skip_balanced() + ")";
            else
                e.window = expect_name();
        }
        return e;
    }

    Expr parse_parenthesized() {
        expect_symbol("(");
        if (is_word("SELECT") || is_word("WITH")) {
            Expr e;
            e.kind = ExprKind::subquery;
            e.subquery = std::make_shared<const Query>(parse_query());
            expect_symbol(")");
            return e;
        }
        Expr first = parse_expr();
        if (accept_symbol(")")) return first;
        Expr tuple;
        tuple.kind = ExprKind::tuple;
        tuple.args.push_back(std::move(first));
        while (accept_symbol(",")) tuple.args.push_back(parse_expr());
        expect_symbol(")");
        return tuple;
    }

    Expr parse_case() {
        expect_word("CASE");
        Expr e;
        e.kind = ExprKind::case_when;
        if (!is_word("WHEN")) {
            e.has_operand = true;
            e.args.push_back(parse_expr());
        }
        if (!is_word("WHEN")) fail("expected WHEN");
        while (accept_word("WHEN")) {
            e.args.push_back(parse_expr());
            expect_word("THEN");
            e.args.push_back(parse_expr());
        }
        if (accept_word("ELSE")) {
            e.has_else = true;
            e.args.push_back(parse_expr());
        }
        expect_word("END");
        return e;
    }
};

}  // namespace

Query parse_query_tokens(const std::vector<Token>& tokens) {
    Parser p(tokens);
    return p.parse_full_query();
}

Query parse_query(std::string_view sql) { return parse_query_tokens(tokenize(sql)); }

Expr parse_expression(std::string_view sql) {
    const auto tokens = tokenize(sql);
    Parser p(tokens);
    return p.parse_full_expression();
}

}  // namespace dq::sql
