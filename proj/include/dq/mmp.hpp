#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dq/catalog.hpp"
#include "dq/database.hpp"
#include "dq/decision.hpp"
#include "dq/modelgate.hpp"
#include "dq/sile.hpp"
#include "dq/sqp.hpp"

namespace dq {

struct MultimodalColumn {
    std::string table;
    std::string column;
    Modality kind = Modality::image_url;

    std::string qualified() const { return table + "." + column; }
};

struct MultimodalColumnSet {
    std::vector<MultimodalColumn> entries;  // catalog order

    bool empty() const { return entries.empty(); }
};

struct DiscoveryOptions {
    std::vector<std::string> patterns{"*image*", "*img*", "*photo*", "*url*", "*doc*", "*path*"};
    std::size_t sample_size = 20;
};

// A column is tagged when its name matches a pattern and a majority of up to
// `sample_size` non-null values carry an image (or document) file extension.
MultimodalColumnSet discover_multimodal_columns(const PrunedSchema& pruned, const Database& db,
                                                const DiscoveryOptions& options = {});

enum class FragmentRole { where, join, not_null };

struct SqlFragment {
    FragmentRole role = FragmentRole::where;
    std::string text;

    bool empty() const { return text.empty(); }
};

// Checks that a boolean fragment parses and that its column references
// resolve in the pruned schema. Throws Error(fragment_invalid).
void validate_where_fragment(std::string_view fragment, const PrunedSchema& pruned);

// Pulls the condition out of a model answer: fenced block (or bare text),
// leading WHERE and trailing `;` removed.
std::string extract_where_fragment(std::string_view model_output);

SqlFragment build_where_clause(const NLQuery& query, const PrunedSchema& pruned,
                               const ValidatedPlan& plan, ModelGateway& gateway);

// INNER JOIN chain from the base table over the pruned FK graph,
// breadth-first. Throws Error(no_join_path) naming the disconnected pair.
SqlFragment build_join_clause(const PrunedSchema& pruned, const ValidatedPlan& plan);

SqlFragment build_not_null_clause(const MultimodalColumnSet& columns);

SanitizedSql assemble_sql(std::string_view projection, const SqlFragment& join,
                          const SqlFragment& where, const SqlFragment& not_null,
                          std::string_view base_table, std::string_view dialect = "sqlite");

struct CandidateRecord {
    std::vector<std::string> columns;  // table.column, aligned with values
    std::vector<Value> values;
    std::vector<Value> primary_key;
    std::vector<std::pair<std::string, AssetRef>> asset_refs;  // qualified column -> asset
};

struct Rationale {
    std::string text;
    std::vector<Value> record_key;
};

Rationale generate_rationale(const NLQuery& query, const CandidateRecord& record,
                             const MultimodalColumnSet& columns, ModelGateway& gateway);

enum class RecordStatus { accepted, recommended, rejected, skipped };
std::string_view to_string(RecordStatus status);

struct RecordOutcome {
    std::vector<Value> key;
    RecordStatus status = RecordStatus::skipped;
    std::string rationale_digest;
    std::string skipped_reason;
};

struct MmpReport {
    std::string question;
    std::optional<QueryPlan> plan;
    std::vector<std::string> pruned_tables;
    std::vector<std::string> prune_diagnostics;
    MultimodalColumnSet multimodal_columns;
    SqlFragment where{FragmentRole::where, {}};
    SqlFragment join{FragmentRole::join, {}};
    SqlFragment not_null{FragmentRole::not_null, {}};
    std::string assembled_sql;
    std::vector<std::string> primary_key;  // base table key columns
    std::size_t candidate_count = 0;
    std::vector<RecordOutcome> records;  // sorted by key
    std::vector<std::vector<Value>> accepted_keys;
    std::vector<std::vector<Value>> recommended_keys;
    std::size_t skipped_count = 0;
    std::size_t rationale_calls = 0;
    std::optional<std::string> final_sql;
    std::vector<std::string> template_ids;
};

struct MmpRun {
    ResultSet result;
    MmpReport report;
};

struct MmpOptions {
    DiscoveryOptions discovery;
    QueryOptions query;
    std::size_t max_parallel = 4;
    // Shuffles the Phase-2 processing order; results must not depend on it.
    std::optional<std::uint64_t> shuffle_seed;
};

// Phase 1 (plan, prune, discover, fragments, assemble, execute) then
// Phase 2 (per-record rationale and decision) then the final key lookup.
MmpRun run_mmp(const NLQuery& query, const SchemaModel& schema, const Database& db,
               ModelGateway& gateway, Decider& decider, const MmpOptions& options = {});

// `SELECT * FROM base WHERE pk IN (...)` over sorted keys; row values for
// composite keys.
std::string final_query_sql(const Table& base, std::vector<std::vector<Value>> keys);

std::string report_json(const MmpRun& run);

}  // namespace dq
