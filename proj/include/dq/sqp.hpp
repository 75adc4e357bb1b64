#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dq/catalog.hpp"
#include "dq/database.hpp"
#include "dq/modelgate.hpp"
#include "dq/sile.hpp"
#include "dq/sql/ast.hpp"

namespace dq {

// A single read-only statement that passed the guardrail. Construct through
// sanitize() only.
class SanitizedSql {
public:
    const std::string& text() const noexcept { return text_; }
    const std::string& dialect() const noexcept { return dialect_; }
    const std::string& source_raw() const noexcept { return source_raw_; }
    const sql::Query& ast() const noexcept { return ast_; }

private:
    friend SanitizedSql sanitize(std::string_view raw, std::string_view dialect);
    SanitizedSql(std::string text, std::string dialect, std::string source_raw, sql::Query ast)
        : text_(std::move(text)),
          dialect_(std::move(dialect)),
          source_raw_(std::move(source_raw)),
          ast_(std::move(ast)) {}

    std::string text_;
    std::string dialect_;
    std::string source_raw_;
    sql::Query ast_;
};

// Strips fences and prose, extracts the first statement and accepts it only
// if it is a single SELECT (or WITH ... SELECT). Throws Error with
// no_select_found, forbidden_statement (detail = verb), multi_statement, or
// sql_parse_failure.
SanitizedSql sanitize(std::string_view raw, std::string_view dialect = "sqlite");

// True when any top-level ORDER BY applies to the statement's result.
bool has_top_level_order(const sql::Query& query);

std::string generate_sql(const NLQuery& query, const PrunedSchema& pruned, ModelGateway& gateway,
                         std::string_view dialect = "sqlite");

ResultSet execute(const SanitizedSql& sql, const Database& db, const QueryOptions& options = {});

struct SqpProvenance {
    std::string question;
    std::optional<QueryPlan> plan;
    std::vector<std::string> pruned_tables;
    std::vector<std::string> prune_diagnostics;
    std::string raw_sql;
    std::string sanitized_sql;
    std::vector<std::string> template_ids;
};

struct SqpRun {
    ResultSet result;
    SqpProvenance provenance;
};

struct SqpOptions {
    QueryOptions query;
};

// plan -> prune -> generate -> sanitize -> execute. Failures are rethrown as
// PipelineError tagged with the stage name.
SqpRun run_sqp(const NLQuery& query, const SchemaModel& schema, const Database& db,
               ModelGateway& gateway, const SqpOptions& options = {});

// Run report as a JSON document (stable key order, no timestamps).
std::string provenance_json(const SqpRun& run);

}  // namespace dq
