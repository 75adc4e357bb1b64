#include "dq/sile.hpp"

#include <json.hpp>

#include <algorithm>
#include <set>

#include "dq/error.hpp"
#include "dq/resources.hpp"
#include "dq/text.hpp"

namespace dq {

using json = nlohmann::json;

namespace {

constexpr std::string_view kPlanTemplate = "sile_plan.v1";

bool contains_ci(const std::vector<std::string>& names, std::string_view name) {
    return std::any_of(names.begin(), names.end(),
                       [&](const std::string& n) { return text::iequals(n, name); });
}

std::string describe(const std::vector<PlanViolation>& violations) {
    std::vector<std::string> parts;
    for (const auto& v : violations)
        parts.push_back(std::string(to_string(v.kind)) + " '" + v.table + "'");
    return text::join(parts, ", ");
}

}  // namespace

std::vector<std::string> QueryPlan::tables() const {
    std::vector<std::string> out{base_table};
    out.insert(out.end(), join_tables.begin(), join_tables.end());
    return out;
}

std::string_view to_string(PlanViolationKind kind) {
    switch (kind) {
        case PlanViolationKind::unknown_table: return "unknown_table";
        case PlanViolationKind::duplicate: return "duplicate";
        case PlanViolationKind::base_in_joins: return "base_in_joins";
    }
    return "unknown";
}

std::vector<PlanViolation> validate_plan(const QueryPlan& plan, const SchemaModel& schema) {
    std::vector<PlanViolation> out;
    if (!schema.find_table(plan.base_table))
        out.push_back({PlanViolationKind::unknown_table, plan.base_table});
    std::vector<std::string> seen;
    bool base_reported = false;
    for (const auto& t : plan.join_tables) {
        if (text::iequals(t, plan.base_table)) {
            if (!base_reported) out.push_back({PlanViolationKind::base_in_joins, t});
            base_reported = true;
        } else if (!schema.find_table(t)) {
            out.push_back({PlanViolationKind::unknown_table, t});
        }
        if (contains_ci(seen, t)) out.push_back({PlanViolationKind::duplicate, t});
        seen.push_back(t);
    }
    return out;
}

ValidatedPlan certify_plan(QueryPlan plan, const SchemaModel& schema) {
    const auto violations = validate_plan(plan, schema);
    if (!violations.empty())
        throw Error(ErrorCode::plan_invalid, "query plan is invalid: " + describe(violations),
                    violations.front().table);
    return ValidatedPlan(std::move(plan));
}

QueryPlan normalize_plan(QueryPlan plan, const SchemaModel& schema) {
    auto canonical = [&](const std::string& name) {
        const Table* t = schema.find_table(text::trim(name));
        return t ? t->name : std::string(text::trim(name));
    };
    plan.base_table = canonical(plan.base_table);
    std::vector<std::string> joins;
    for (const auto& j : plan.join_tables) {
        auto name = canonical(j);
        if (name.empty() || text::iequals(name, plan.base_table) || contains_ci(joins, name)) continue;
        joins.push_back(std::move(name));
    }
    plan.join_tables = std::move(joins);
    return plan;
}

QueryPlan parse_plan_output(std::string_view model_output) {
    QueryPlan plan;
    plan.raw_model_output = std::string(model_output);
    const auto blocks = text::fenced_blocks(model_output);
    const text::FencedBlock* chosen = nullptr;
    for (const auto& b : blocks) {
        if (b.language == "json" || (b.language.empty() && text::trim(b.body).substr(0, 1) == "{"))
            chosen = &b;
    }
    std::string body;
    if (chosen) {
        body = chosen->body;
        const auto fence = model_output.find("```");
        plan.reasoning = std::string(text::trim(model_output.substr(0, fence)));
    } else {
        // Unfenced answers: accept a trailing bare JSON object.
        const auto open = model_output.rfind("{\"base_table\"");
        if (open == std::string_view::npos)
            throw Error(ErrorCode::plan_invalid, "no fenced plan block found in model output");
        const auto close = model_output.find('}', open);
        body = std::string(model_output.substr(open, close == std::string_view::npos
                                                         ? std::string_view::npos
                                                         : close - open + 1));
        plan.reasoning = std::string(text::trim(model_output.substr(0, open)));
    }
    json j;
    try {
        j = json::parse(body);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::plan_invalid, std::string("plan block is not valid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("base_table") || !j["base_table"].is_string())
        throw Error(ErrorCode::plan_invalid, "plan block lacks a string base_table");
    plan.base_table = j["base_table"].get<std::string>();
    if (plan.base_table.empty()) throw Error(ErrorCode::plan_invalid, "plan base_table is empty");
    if (j.contains("join_tables") && !j["join_tables"].is_null()) {
        if (!j["join_tables"].is_array())
            throw Error(ErrorCode::plan_invalid, "plan join_tables must be a list");
        for (const auto& t : j["join_tables"]) {
            if (!t.is_string()) throw Error(ErrorCode::plan_invalid, "plan join_tables must hold names");
            plan.join_tables.push_back(t.get<std::string>());
        }
    }
    return plan;
}

ValidatedPlan plan(const NLQuery& query, const SchemaModel& schema, ModelGateway& gateway) {
    if (schema.empty())
        throw Error(ErrorCode::empty_schema, "cannot plan over an empty schema", schema.database_name());
    if (text::trim(query.text).empty())
        throw Error(ErrorCode::invalid_argument, "query text is empty");

    const Prompt prompt = render_prompt(
        kPlanTemplate, {{"schema", render_schema_context(schema, RenderStyle::full)},
                        {"question", query.text}});
    ModelRequest request;
    request.system_prompt = prompt.system;
    request.parts.push_back(ContentPart::text_part(prompt.user));
    request.template_id = prompt.template_id;

    std::string last_error;
    for (std::size_t attempt = 1; attempt <= 2; ++attempt) {
        const ModelResponse response = gateway.complete(request);
        try {
            if (text::trim(response.text).empty())
                throw Error(ErrorCode::empty_completion, "model returned an empty plan");
            QueryPlan p = normalize_plan(parse_plan_output(response.text), schema);
            p.template_id = prompt.template_id;
            p.model_calls = attempt;
            return certify_plan(std::move(p), schema);
        } catch (const Error& e) {
            last_error = e.what();
            if (attempt == 2)
                throw Error(ErrorCode::plan_invalid, "plan still invalid after repair: " + last_error,
                            e.detail());
            const Prompt repair =
                render_prompt("repair.v1", {{"previous", response.text}, {"error", last_error}});
            request.parts.push_back(ContentPart::text_part(repair.user));
        }
    }
    throw Error(ErrorCode::plan_invalid, last_error);
}

PrunedSchema prune_schema(const SchemaModel& schema, const ValidatedPlan& plan) {
    const auto wanted = plan->tables();
    for (const auto& name : wanted) {
        if (!schema.find_table(name))
            throw Error(ErrorCode::plan_invalid,
                        "plan was not validated against this schema: unknown table '" + name + "'",
                        name);
    }
    auto retained = [&](std::string_view name) { return contains_ci(wanted, name); };

    PrunedSchema out;
    std::vector<Table> tables;
    for (const auto& t : schema.tables()) {
        if (!retained(t.name)) continue;
        Table copy = t;
        copy.foreign_keys.clear();
        for (const auto& fk : t.foreign_keys) {
            if (retained(fk.referenced_table)) copy.foreign_keys.push_back(fk);
        }
        tables.push_back(std::move(copy));
    }

    // Neighbours of each dropped table among the retained ones, in either
    // FK direction.
    std::map<std::string, std::set<std::string>> bridges;
    for (const auto& t : schema.tables()) {
        for (const auto& fk : t.foreign_keys) {
            const bool from_kept = retained(t.name);
            const bool to_kept = retained(fk.referenced_table);
            if (from_kept && !to_kept)
                bridges[text::to_lower(fk.referenced_table)].insert(t.name);
            else if (!from_kept && to_kept)
                bridges[text::to_lower(t.name)].insert(schema.table(fk.referenced_table).name);
        }
    }
    for (const auto& [dropped, neighbours] : bridges) {
        if (neighbours.size() < 2) continue;
        const std::string name = schema.table(dropped).name;
        out.diagnostics.push_back("table '" + name + "' was pruned but links retained tables " +
                                  text::join({neighbours.begin(), neighbours.end()}, ", ") +
                                  "; it may be a missing bridge table");
    }
    out.schema = SchemaModel(schema.database_name(), std::move(tables));
    return out;
}

}  // namespace dq
