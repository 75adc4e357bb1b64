#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dq/catalog.hpp"
#include "dq/modelgate.hpp"

namespace dq {

enum class Intent { structured, multimodal };

struct NLQuery {
    std::string text;
    std::optional<Intent> intent_hint;
};

struct QueryPlan {
    std::string base_table;
    std::vector<std::string> join_tables;
    std::string reasoning;
    std::string raw_model_output;
    std::string template_id;
    std::size_t model_calls = 0;

    // Base table first, then joins in plan order.
    std::vector<std::string> tables() const;
};

enum class PlanViolationKind { unknown_table, duplicate, base_in_joins };
std::string_view to_string(PlanViolationKind kind);

struct PlanViolation {
    PlanViolationKind kind;
    std::string table;
};

std::vector<PlanViolation> validate_plan(const QueryPlan& plan, const SchemaModel& schema);

// A plan known to satisfy every invariant against a particular schema.
// Only obtainable through certify_plan (or plan()).
class ValidatedPlan {
public:
    const QueryPlan& plan() const noexcept { return plan_; }
    const QueryPlan* operator->() const noexcept { return &plan_; }

private:
    friend ValidatedPlan certify_plan(QueryPlan plan, const SchemaModel& schema);
    explicit ValidatedPlan(QueryPlan plan) : plan_(std::move(plan)) {}
    QueryPlan plan_;
};

// Throws Error(plan_invalid) listing the violations.
ValidatedPlan certify_plan(QueryPlan plan, const SchemaModel& schema);

// Matches names case-insensitively against the schema and rewrites them to
// catalog spelling, removes the base table from the joins, and drops
// duplicate joins. Unknown names are kept as written.
QueryPlan normalize_plan(QueryPlan plan, const SchemaModel& schema);

// Extracts {base_table, join_tables} from the fenced JSON block of a model
// answer; prose before the block becomes the reasoning. Throws
// Error(plan_invalid) when no well-formed block is present.
QueryPlan parse_plan_output(std::string_view model_output);

ValidatedPlan plan(const NLQuery& query, const SchemaModel& schema, ModelGateway& gateway);

struct PrunedSchema {
    SchemaModel schema;
    // Dropped foreign keys whose far endpoint could have bridged two
    // retained tables.
    std::vector<std::string> diagnostics;
};

PrunedSchema prune_schema(const SchemaModel& schema, const ValidatedPlan& plan);

}  // namespace dq
