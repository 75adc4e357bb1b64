#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "dq/catalog.hpp"
#include "dq/evalkit.hpp"

namespace dq {

enum class FailureCategory {
    schema_hallucination,
    join_table_mismatch,
    select_column_mismatch,
    where_or_logic_error,
    other,
};

constexpr std::array<FailureCategory, 5> kFailureCategories = {
    FailureCategory::schema_hallucination, FailureCategory::join_table_mismatch,
    FailureCategory::select_column_mismatch, FailureCategory::where_or_logic_error,
    FailureCategory::other};

std::string_view to_string(FailureCategory category);  // SCHEMA_HALLUCINATION, ...
std::optional<FailureCategory> parse_failure_category(std::string_view s);

// Identifiers are lowercased. Columns are "table.column" when the owning
// base table is known, the bare name otherwise.
struct Identifiers {
    std::set<std::string> tables;
    std::set<std::string> columns;
    bool star = false;
    std::set<std::string> derived_names;    // CTE and derived-table names
    std::set<std::string> derived_columns;  // columns those expose
    std::set<std::string> select_aliases;
};

// Throws Error(sql_parse_failure).
Identifiers extract_identifiers(std::string_view sql);

struct FailureFinding {
    std::string query_id;
    FailureCategory category = FailureCategory::other;
    std::vector<std::string> evidence;
};

// First matching category in precedence order. The pair is assumed to be an
// execution mismatch. Throws Error(input_data) when the gold SQL does not parse.
FailureFinding classify_failure(std::string_view pred_sql, std::string_view gold_sql,
                                const SchemaModel& schema, std::string query_id = {});

struct FailureRow {
    FailureCategory category;
    std::size_t count = 0;
    double percent = 0.0;
};

struct FailureDistribution {
    std::vector<FailureRow> rows;  // every category, fixed order
    std::size_t total = 0;
};

// Throws Error(empty_input) for no findings.
FailureDistribution failure_report(const std::vector<FailureFinding>& findings);
std::string render_failure_table(const FailureDistribution& distribution);

// One JSON object per finding.
std::string findings_jsonl(const std::vector<FailureFinding>& findings);

// Classifies every incorrect record of an evaluation report.
std::vector<FailureFinding> analyze_report(const EvalReport& report, const SchemaModel& schema);

}  // namespace dq
