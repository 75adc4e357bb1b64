#include <json.hpp>

#include <functional>

#include "dq/error.hpp"
#include "dq/evalkit.hpp"
#include "dq/resources.hpp"
#include "dq/sql/parser.hpp"
#include "dq/text.hpp"

namespace dq {

using json = nlohmann::json;
using sql::Expr;
using sql::ExprKind;

std::string_view to_string(HardnessLabel label) {
    switch (label) {
        case HardnessLabel::easy: return "easy";
        case HardnessLabel::medium: return "medium";
        case HardnessLabel::hard: return "hard";
        case HardnessLabel::extra: return "extra";
    }
    return "extra";
}

std::optional<HardnessLabel> parse_hardness(std::string_view s) {
    const auto l = text::to_lower(text::trim(s));
    if (l == "easy") return HardnessLabel::easy;
    if (l == "medium") return HardnessLabel::medium;
    if (l == "hard") return HardnessLabel::hard;
    if (l == "extra" || l == "extra hard" || l == "extra_hard") return HardnessLabel::extra;
    return std::nullopt;
}

namespace {

bool is_connective(const Expr& e) {
    return e.kind == ExprKind::binary && (e.text == "AND" || e.text == "OR");
}

// Leaves of the AND/OR tree.
void condition_units(const Expr& e, std::vector<const Expr*>& out) {
    if (is_connective(e)) {
        for (const auto& a : e.args) condition_units(a, out);
        return;
    }
    out.push_back(&e);
}

int count_ors(const Expr& e) {
    if (!is_connective(e)) return 0;
    int n = e.text == "OR" ? 1 : 0;
    for (const auto& a : e.args) n += count_ors(a);
    return n;
}

// Walks an expression without entering subqueries.
bool any_node(const Expr& e, const std::function<bool(const Expr&)>& pred) {
    if (pred(e)) return true;
    for (const auto& a : e.args)
        if (any_node(a, pred)) return true;
    return false;
}

int count_nodes(const Expr& e, const std::function<bool(const Expr&)>& pred) {
    int n = pred(e) ? 1 : 0;
    for (const auto& a : e.args) n += count_nodes(a, pred);
    return n;
}

bool is_aggregate(const Expr& e) {
    if (e.kind != ExprKind::function || !e.window.empty()) return false;
    const auto u = text::to_upper(e.text);
    return u == "COUNT" || u == "SUM" || u == "AVG" || u == "MIN" || u == "MAX";
}

bool has_aggregate(const Expr& e) { return any_node(e, is_aggregate); }

bool is_nested_query(const Expr& e) { return e.subquery != nullptr; }

std::vector<const Expr*> units_of(const std::optional<Expr>& e) {
    std::vector<const Expr*> out;
    if (e) condition_units(*e, out);
    return out;
}

}  // namespace

HardnessComponents hardness_components(const sql::Query& query) {
    const auto& core = query.core;
    HardnessComponents c;

    const auto where_units = units_of(core.where);
    const auto having_units = units_of(core.having);

    // component1
    if (core.where) ++c.component1;
    if (!core.group_by.empty()) ++c.component1;
    if (!query.order_by.empty()) ++c.component1;
    if (query.limit) ++c.component1;
    std::vector<const Expr*> on_exprs;
    if (core.from) {
        c.component1 += static_cast<int>(core.from->joins.size());
        for (const auto& j : core.from->joins)
            if (j.on) on_exprs.push_back(&*j.on);
    }
    for (const auto* on : on_exprs) c.component1 += count_ors(*on);
    if (core.where) c.component1 += count_ors(*core.where);
    if (core.having) c.component1 += count_ors(*core.having);
    for (const auto* u : where_units)
        if (u->kind == ExprKind::like && text::iequals(u->text, "LIKE")) ++c.component1;

    // component2
    std::vector<const Expr*> all_units = where_units;
    all_units.insert(all_units.end(), having_units.begin(), having_units.end());
    for (const auto* on : on_exprs) condition_units(*on, all_units);
    for (const auto* u : all_units) c.component2 += count_nodes(*u, is_nested_query);
    c.component2 += static_cast<int>(query.compounds.size());

    // others
    int aggregated = 0;
    for (const auto& item : core.items) aggregated += has_aggregate(item.expr);
    for (const auto* u : where_units) aggregated += has_aggregate(*u);
    for (const auto& g : core.group_by) aggregated += has_aggregate(g);
    for (const auto& o : query.order_by) aggregated += has_aggregate(o.expr);
    for (const auto* u : having_units) aggregated += has_aggregate(*u);
    if (aggregated > 1) ++c.others;
    if (core.items.size() > 1) ++c.others;
    if (where_units.size() > 1) ++c.others;
    if (core.group_by.size() > 1) ++c.others;
    return c;
}

namespace {

Bound parse_bound(const json& j, const char* key) {
    Bound b;
    if (!j.contains(key)) return b;
    const auto& v = j.at(key);
    if (v.contains("min")) b.min = v.at("min").get<int>();
    if (v.contains("max")) b.max = v.at("max").get<int>();
    return b;
}

HardnessLabel label_from(const std::string& s) {
    const auto l = parse_hardness(s);
    if (!l) throw Error(ErrorCode::invalid_argument, "unknown hardness label '" + s + "'", s);
    return *l;
}

}  // namespace

HardnessRules HardnessRules::parse(std::string_view json_text) {
    HardnessRules out;
    try {
        const auto doc = json::parse(json_text);
        for (const auto& entry : doc.at("labels")) {
            std::vector<HardnessRule> rules;
            for (const auto& r : entry.at("rules"))
                rules.push_back({parse_bound(r, "component1"), parse_bound(r, "component2"),
                                 parse_bound(r, "others")});
            out.labels.emplace_back(label_from(entry.at("label").get<std::string>()), std::move(rules));
        }
        out.fallback = label_from(doc.at("fallback").get<std::string>());
    } catch (const json::exception& e) {
        throw Error(ErrorCode::invalid_argument, std::string("malformed hardness rules: ") + e.what());
    }
    return out;
}

const HardnessRules& HardnessRules::builtin() {
    static const HardnessRules rules = parse(resources::get("hardness_rules.json"));
    return rules;
}

HardnessLabel HardnessRules::classify(const HardnessComponents& c) const {
    for (const auto& [label, rules] : labels) {
        for (const auto& r : rules) {
            if (r.component1.admits(c.component1) && r.component2.admits(c.component2) &&
                r.others.admits(c.others))
                return label;
        }
    }
    return fallback;
}

HardnessLabel classify_hardness(std::string_view sql_text, const HardnessRules& rules) {
    return rules.classify(hardness_components(sql::parse_query(sql_text)));
}

}  // namespace dq
