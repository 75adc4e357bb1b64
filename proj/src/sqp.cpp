#include "dq/sqp.hpp"

#include "dq/error.hpp"
#include "dq/resources.hpp"
#include "dq/text.hpp"
#include "json_util.hpp"

namespace dq {

namespace {

constexpr std::string_view kGenerateTemplate = "sqp_generate.v1";

template <typename F>
auto stage(const char* name, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const PipelineError&) {
        throw;
    } catch (const Error& e) {
        throw PipelineError(name, e);
    }
}

}  // namespace

bool has_top_level_order(const sql::Query& query) {
    if (!query.order_by.empty()) return true;
    if (query.compounds.empty() && query.core.parenthesized)
        return has_top_level_order(*query.core.parenthesized);
    return false;
}

std::string generate_sql(const NLQuery& query, const PrunedSchema& pruned, ModelGateway& gateway,
                         std::string_view dialect) {
    if (pruned.schema.empty())
        throw Error(ErrorCode::empty_schema, "cannot generate SQL over an empty schema");
    const Prompt prompt =
        render_prompt(kGenerateTemplate,
                      {{"schema", render_schema_context(pruned.schema, RenderStyle::full)},
                       {"question", query.text},
                       {"dialect", dialect == "sqlite" ? "SQLite" : std::string(dialect)}});
    ModelRequest request;
    request.system_prompt = prompt.system;
    request.parts.push_back(ContentPart::text_part(prompt.user));
    request.template_id = prompt.template_id;
    return gateway.complete(request).text;
}

ResultSet execute(const SanitizedSql& sql, const Database& db, const QueryOptions& options) {
    ResultSet rs = db.query(sql.text(), options);
    rs.ordered = has_top_level_order(sql.ast());
    return rs;
}

SqpRun run_sqp(const NLQuery& query, const SchemaModel& schema, const Database& db,
               ModelGateway& gateway, const SqpOptions& options) {
    SqpRun run;
    auto& prov = run.provenance;
    prov.question = query.text;
    const ValidatedPlan validated = stage("plan", [&] { return plan(query, schema, gateway); });
    prov.plan = validated.plan();
    prov.template_ids.push_back(validated->template_id);

    const PrunedSchema pruned = stage("prune", [&] { return prune_schema(schema, validated); });
    prov.pruned_tables = pruned.schema.table_names();
    prov.prune_diagnostics = pruned.diagnostics;

    prov.raw_sql = stage("generate", [&] {
        std::string raw = generate_sql(query, pruned, gateway, db.dialect());
        if (text::trim(raw).empty())
            throw Error(ErrorCode::empty_completion, "model returned an empty completion");
        return raw;
    });
    prov.template_ids.emplace_back(kGenerateTemplate);

    const SanitizedSql clean = stage("sanitize", [&] { return sanitize(prov.raw_sql, db.dialect()); });
    prov.sanitized_sql = clean.text();

    run.result = stage("execute", [&] { return execute(clean, db, options.query); });
    return run;
}

std::string provenance_json(const SqpRun& run) {
    using ojson = nlohmann::ordered_json;
    const auto& p = run.provenance;
    ojson plan_json = nullptr;
    if (p.plan) {
        plan_json = {{"base_table", p.plan->base_table},
                     {"join_tables", p.plan->join_tables},
                     {"reasoning", p.plan->reasoning},
                     {"template_id", p.plan->template_id},
                     {"model_calls", p.plan->model_calls}};
    }
    ojson doc = {{"pipeline", "sql"},
                 {"question", p.question},
                 {"plan", plan_json},
                 {"pruned_tables", p.pruned_tables},
                 {"prune_diagnostics", p.prune_diagnostics},
                 {"raw_sql", p.raw_sql},
                 {"sanitized_sql", p.sanitized_sql},
                 {"template_ids", p.template_ids},
                 {"result", detail::result_json(run.result)}};
    return doc.dump(2) + "\n";
}

}  // namespace dq
