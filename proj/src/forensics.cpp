#include "dq/forensics.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <map>

#include "dq/error.hpp"
#include "dq/sql/parser.hpp"
#include "dq/sql/printer.hpp"
#include "dq/text.hpp"

namespace dq {

using sql::Expr;
using sql::ExprKind;
using sql::Query;
using sql::SelectCore;

std::string_view to_string(FailureCategory category) {
    switch (category) {
        case FailureCategory::schema_hallucination: return "SCHEMA_HALLUCINATION";
        case FailureCategory::join_table_mismatch: return "JOIN_TABLE_MISMATCH";
        case FailureCategory::select_column_mismatch: return "SELECT_COLUMN_MISMATCH";
        case FailureCategory::where_or_logic_error: return "WHERE_OR_LOGIC_ERROR";
        case FailureCategory::other: return "OTHER";
    }
    return "OTHER";
}

std::optional<FailureCategory> parse_failure_category(std::string_view s) {
    const auto u = text::to_upper(text::trim(s));
    for (const auto c : kFailureCategories)
        if (u == to_string(c)) return c;
    return std::nullopt;
}

namespace {

struct Source {
    std::string table;  // empty for derived sources
};

struct Scope {
    const Scope* parent = nullptr;
    std::map<std::string, Source> sources;  // exposed name -> source
    std::set<std::string> select_aliases;
    std::set<std::string> ctes;

    const Source* find(const std::string& name) const {
        for (const Scope* s = this; s; s = s->parent) {
            const auto it = s->sources.find(name);
            if (it != s->sources.end()) return &it->second;
        }
        return nullptr;
    }
    bool is_cte(const std::string& name) const {
        for (const Scope* s = this; s; s = s->parent)
            if (s->ctes.count(name)) return true;
        return false;
    }
};

std::set<std::string> exposed_columns(const Query& q) {
    std::set<std::string> out;
    for (const auto& item : q.core.items) {
        if (!item.alias.empty())
            out.insert(text::to_lower(item.alias));
        else if (item.expr.kind == ExprKind::column)
            out.insert(text::to_lower(item.expr.text));
    }
    return out;
}

class IdentifierWalker {
public:
    Identifiers ids;

    void query(const Query& q, const Scope* parent) {
        Scope with;
        with.parent = parent;
        for (const auto& cte : q.ctes) {
            const auto name = text::to_lower(cte.name);
            if (q.recursive) with.ctes.insert(name);
            if (cte.query) query(*cte.query, &with);
            with.ctes.insert(name);
            ids.derived_names.insert(name);
            if (!cte.columns.empty()) {
                for (const auto& c : cte.columns) ids.derived_columns.insert(text::to_lower(c));
            } else if (cte.query) {
                for (const auto& c : exposed_columns(*cte.query)) ids.derived_columns.insert(c);
            }
        }
        Scope first = core(q.core, &with);
        for (const auto& o : q.order_by) expr(o.expr, first);
        if (q.limit) expr(*q.limit, first);
        if (q.offset) expr(*q.offset, first);
        for (const auto& c : q.compounds) core(c.core, &with);
    }

private:
    Scope core(const SelectCore& c, const Scope* parent) {
        Scope scope;
        scope.parent = parent;
        if (c.parenthesized) {
            query(*c.parenthesized, parent);
            return scope;
        }
        if (c.from) {
            add_source(c.from->first, scope, parent);
            for (const auto& j : c.from->joins) add_source(j.table, scope, parent);
        }
        for (const auto& item : c.items)
            if (!item.alias.empty()) scope.select_aliases.insert(text::to_lower(item.alias));
        ids.select_aliases.insert(scope.select_aliases.begin(), scope.select_aliases.end());
        for (const auto& item : c.items) {
            if (item.expr.kind == ExprKind::star) ids.star = true;
            expr(item.expr, scope);
        }
        if (c.from) {
            for (const auto& j : c.from->joins) {
                if (j.on) expr(*j.on, scope);
                for (const auto& u : j.using_columns) column({}, u, scope);
            }
        }
        if (c.where) expr(*c.where, scope);
        for (const auto& g : c.group_by) expr(g, scope);
        if (c.having) expr(*c.having, scope);
        return scope;
    }

    void add_source(const sql::TableRef& ref, Scope& scope, const Scope* parent) {
        if (ref.is_derived()) {
            query(*ref.subquery, parent);
            const auto alias = text::to_lower(ref.alias);
            if (!alias.empty()) {
                scope.sources[alias] = Source{};
                ids.derived_names.insert(alias);
            }
            for (const auto& c : exposed_columns(*ref.subquery)) ids.derived_columns.insert(c);
            return;
        }
        const auto name = text::to_lower(ref.name);
        const auto exposed = text::to_lower(ref.exposed_name());
        if (scope.is_cte(name)) {
            scope.sources[exposed] = Source{};
            return;
        }
        ids.tables.insert(name);
        scope.sources[exposed] = Source{name};
    }

    void column(const std::string& qualifier, const std::string& name, const Scope& scope) {
        const auto col = text::to_lower(name);
        if (!qualifier.empty()) {
            const auto q = text::to_lower(qualifier);
            const Source* src = scope.find(q);
            if (src && src->table.empty()) return;
            ids.columns.insert((src ? src->table : q) + "." + col);
            return;
        }
        if (scope.select_aliases.count(col)) return;
        if (scope.sources.size() == 1 && !scope.sources.begin()->second.table.empty()) {
            ids.columns.insert(scope.sources.begin()->second.table + "." + col);
            return;
        }
        ids.columns.insert(col);
    }

    void expr(const Expr& e, const Scope& scope) {
        if (e.kind == ExprKind::column) column(e.qualifier, e.text, scope);
        for (const auto& a : e.args) expr(a, scope);
        if (e.subquery) query(*e.subquery, &scope);
    }
};

bool any_table_has(const SchemaModel& schema, const std::set<std::string>& tables, const std::string& col) {
    for (const auto& t : tables) {
        const Table* table = schema.find_table(t);
        if (table && table->find_column(col)) return true;
    }
    return false;
}

std::vector<std::string> hallucinations(const Identifiers& ids, const SchemaModel& schema) {
    std::vector<std::string> out;
    for (const auto& t : ids.tables)
        if (!schema.find_table(t)) out.push_back(t);
    for (const auto& c : ids.columns) {
        const auto dot = c.find('.');
        if (dot != std::string::npos) {
            const auto table = c.substr(0, dot);
            const auto col = c.substr(dot + 1);
            if (ids.derived_names.count(table)) continue;
            const Table* t = schema.find_table(table);
            if (!t) {
                // Unknown qualifier already reported through the table set,
                // or an alias the walker could not see.
                if (!ids.tables.count(table)) out.push_back(c);
                continue;
            }
            if (!t->find_column(col)) out.push_back(c);
            continue;
        }
        if (ids.derived_columns.count(c) || ids.select_aliases.count(c)) continue;
        if (!any_table_has(schema, ids.tables, c)) out.push_back(c);
    }
    return out;
}

bool names_schema_object(const SchemaModel& schema, const std::string& word) {
    for (const auto& t : schema.tables()) {
        if (text::iequals(t.name, word) || t.find_column(word)) return true;
    }
    return false;
}

// Renders expressions with table aliases resolved to (lowercased) table names.
class Canonical {
public:
    Canonical(const Query& q, const SchemaModel& schema) : schema_(schema) {
        const auto& core = q.core;
        if (!core.from) return;
        add(core.from->first);
        for (const auto& j : core.from->joins) add(j.table);
    }

    std::string render(const Expr& e) const {
        sql::PrintOptions opts;
        opts.lowercase_identifiers = true;
        opts.column_renderer = [this](const Expr& c) { return column(c); };
        return sql::to_sql(e, opts);
    }

    std::string star(const Expr& e) const {
        if (e.qualifier.empty()) return "*";
        return resolve(text::to_lower(e.qualifier)) + ".*";
    }

private:
    void add(const sql::TableRef& ref) {
        const auto exposed = text::to_lower(ref.exposed_name());
        const auto table = ref.is_derived() ? exposed : text::to_lower(ref.name);
        aliases_[exposed] = table;
        if (!ref.is_derived()) tables_.push_back(table);
    }

    std::string resolve(const std::string& q) const {
        const auto it = aliases_.find(q);
        return it == aliases_.end() ? q : it->second;
    }

    std::string column(const Expr& c) const {
        const auto col = text::to_lower(c.text);
        if (!c.qualifier.empty()) return resolve(text::to_lower(c.qualifier)) + "." + col;
        std::vector<std::string> owners;
        for (const auto& t : tables_) {
            const Table* table = schema_.find_table(t);
            if (table && table->find_column(col)) owners.push_back(t);
        }
        if (owners.size() == 1) return owners.front() + "." + col;
        if (tables_.size() == 1 && aliases_.size() == 1) return tables_.front() + "." + col;
        return col;
    }

    const SchemaModel& schema_;
    std::map<std::string, std::string> aliases_;
    std::vector<std::string> tables_;
};

std::vector<std::string> projection(const Query& q, const Canonical& canon) {
    std::vector<std::string> out;
    for (const auto& item : q.core.items)
        out.push_back(item.expr.kind == ExprKind::star ? canon.star(item.expr) : canon.render(item.expr));
    std::sort(out.begin(), out.end());
    return out;
}

void conjuncts(const Expr& e, std::vector<const Expr*>& out) {
    if (e.kind == ExprKind::binary && e.text == "AND") {
        for (const auto& a : e.args) conjuncts(a, out);
        return;
    }
    out.push_back(&e);
}

std::string predicate(const std::optional<Expr>& e, const Canonical& canon) {
    if (!e) return {};
    std::vector<const Expr*> parts;
    conjuncts(*e, parts);
    std::vector<std::string> rendered;
    for (const auto* p : parts) rendered.push_back(canon.render(*p));
    std::sort(rendered.begin(), rendered.end());
    return text::join(rendered, " AND ");
}

std::string joined(const std::vector<std::string>& v) { return text::join(v, ", "); }

}  // namespace

Identifiers extract_identifiers(std::string_view sql_text) {
    const Query q = sql::parse_query(sql_text);
    IdentifierWalker w;
    w.query(q, nullptr);
    return std::move(w.ids);
}

FailureFinding classify_failure(std::string_view pred_sql, std::string_view gold_sql,
                                const SchemaModel& schema, std::string query_id) {
    FailureFinding f;
    f.query_id = std::move(query_id);

    Query gold;
    try {
        gold = sql::parse_query(gold_sql);
    } catch (const Error& e) {
        throw Error(ErrorCode::input_data,
                    "gold SQL for query '" + f.query_id + "' does not parse: " + e.what(), f.query_id);
    }

    Query pred;
    try {
        pred = sql::parse_query(pred_sql);
    } catch (const sql::ParseError& e) {
        const auto& near = e.near_token();
        const bool word = near.kind == sql::TokenKind::identifier || near.kind == sql::TokenKind::quoted_identifier;
        if (word && !(near.kind == sql::TokenKind::identifier && sql::is_reserved(near.upper)) &&
            !names_schema_object(schema, near.text)) {
            f.category = FailureCategory::schema_hallucination;
            f.evidence.push_back(text::to_lower(near.text));
        } else {
            f.category = FailureCategory::other;
            f.evidence.push_back(std::string("unparseable: ") + e.what());
        }
        return f;
    }

    IdentifierWalker pw;
    pw.query(pred, nullptr);
    IdentifierWalker gw;
    gw.query(gold, nullptr);

    if (auto unknown = hallucinations(pw.ids, schema); !unknown.empty()) {
        f.category = FailureCategory::schema_hallucination;
        f.evidence = std::move(unknown);
        return f;
    }

    if (pw.ids.tables != gw.ids.tables) {
        f.category = FailureCategory::join_table_mismatch;
        for (const auto& t : gw.ids.tables)
            if (!pw.ids.tables.count(t)) f.evidence.push_back("missing:" + t);
        for (const auto& t : pw.ids.tables)
            if (!gw.ids.tables.count(t)) f.evidence.push_back("extra:" + t);
        return f;
    }

    const Canonical pc(pred, schema);
    const Canonical gc(gold, schema);
    const auto pp = projection(pred, pc);
    const auto gp = projection(gold, gc);
    if (pp != gp) {
        f.category = FailureCategory::select_column_mismatch;
        f.evidence = {"pred:" + joined(pp), "gold:" + joined(gp)};
        return f;
    }

    const auto pwhere = predicate(pred.core.where, pc);
    const auto gwhere = predicate(gold.core.where, gc);
    const auto phaving = predicate(pred.core.having, pc);
    const auto ghaving = predicate(gold.core.having, gc);
    if (pwhere != gwhere) {
        f.category = FailureCategory::where_or_logic_error;
        f.evidence = {"pred where:" + pwhere, "gold where:" + gwhere};
        return f;
    }
    if (phaving != ghaving) {
        f.category = FailureCategory::where_or_logic_error;
        f.evidence = {"pred having:" + phaving, "gold having:" + ghaving};
        return f;
    }
    f.category = FailureCategory::other;
    return f;
}

FailureDistribution failure_report(const std::vector<FailureFinding>& findings) {
    if (findings.empty()) throw Error(ErrorCode::empty_input, "no failures to report");
    FailureDistribution d;
    d.total = findings.size();
    for (const auto c : kFailureCategories) {
        FailureRow row{c, 0, 0.0};
        for (const auto& f : findings) row.count += f.category == c;
        row.percent = 100.0 * static_cast<double>(row.count) / static_cast<double>(d.total);
        d.rows.push_back(row);
    }
    return d;
}

std::string render_failure_table(const FailureDistribution& d) {
    std::string out;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%-24s %8s %9s\n", "Failure category", "Count", "Share");
    out += buf;
    for (const auto& r : d.rows) {
        std::snprintf(buf, sizeof(buf), "%-24s %8zu %8.2f%%\n", std::string(to_string(r.category)).c_str(),
                      r.count, r.percent);
        out += buf;
    }
    std::snprintf(buf, sizeof(buf), "%-24s %8zu %8.2f%%\n", "Total", d.total, 100.0);
    out += buf;
    return out;
}

std::string findings_jsonl(const std::vector<FailureFinding>& findings) {
    std::string out;
    for (const auto& f : findings) {
        nlohmann::ordered_json j = {
            {"query_id", f.query_id}, {"category", std::string(to_string(f.category))}, {"evidence", f.evidence}};
        out += j.dump() + "\n";
    }
    return out;
}

std::vector<FailureFinding> analyze_report(const EvalReport& report, const SchemaModel& schema) {
    std::vector<FailureFinding> out;
    for (const auto& r : report.records) {
        if (r.correct) continue;
        out.push_back(classify_failure(r.predicted_sql, r.gold_sql, schema, r.query_id));
    }
    return out;
}

}  // namespace dq
