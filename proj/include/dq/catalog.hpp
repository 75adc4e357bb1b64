#pragma once

#include <cstddef>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dq/database.hpp"

namespace dq {

enum class Modality { none, image_url, document_path };

std::string_view to_string(Modality m);
Modality modality_from_string(std::string_view s);  // throws invalid_argument

struct Column {
    std::string name;
    std::string data_type;
    bool nullable = true;
    std::optional<std::string> comment;
    Modality modality = Modality::none;
};

struct ForeignKey {
    std::vector<std::string> local_columns;
    std::string referenced_table;
    std::vector<std::string> referenced_columns;
};

struct Table {
    std::string name;
    std::vector<Column> columns;
    std::vector<std::string> primary_key;
    std::vector<ForeignKey> foreign_keys;
    std::optional<std::string> comment;
    bool is_view = false;

    const Column* find_column(std::string_view column) const;
};

// Immutable image of a database catalog. Identifiers keep the spelling the
// catalog reported; every lookup compares them case-insensitively.
class SchemaModel {
public:
    SchemaModel() = default;
    // Throws Error(invalid_argument) naming the first violated invariant.
    SchemaModel(std::string database_name, std::vector<Table> tables);

    const std::string& database_name() const noexcept { return database_name_; }
    const std::vector<Table>& tables() const noexcept { return tables_; }
    bool empty() const noexcept { return tables_.empty(); }
    std::size_t foreign_key_count() const;

    const Table* find_table(std::string_view name) const;
    const Table& table(std::string_view name) const;  // throws invalid_argument

    // Catalog-order names of all tables.
    std::vector<std::string> table_names() const;

    friend bool operator==(const SchemaModel& a, const SchemaModel& b);

private:
    std::string database_name_;
    std::vector<Table> tables_;
};

bool operator==(const Column& a, const Column& b);
bool operator==(const ForeignKey& a, const ForeignKey& b);
bool operator==(const Table& a, const Table& b);

// Reads the catalog directly (no caching).
SchemaModel read_catalog(const Database& db);

// Process-wide, in-memory schema cache keyed by database identity.
// Concurrent callers for the same database share one catalog scan.
class SchemaCache {
public:
    std::shared_ptr<const SchemaModel> introspect(const Database& db);
    void invalidate(const std::string& identity);
    void clear();
    // Number of catalog scans actually performed.
    std::size_t scans() const;

    static SchemaCache& global();

private:
    mutable std::mutex mu_;
    std::map<std::string, std::shared_future<std::shared_ptr<const SchemaModel>>> entries_;
    std::size_t scans_ = 0;
};

// Cached introspection through the global cache.
std::shared_ptr<const SchemaModel> introspect(const Database& db);

struct SemanticEnrichment {
    std::vector<std::pair<std::string, std::string>> table_descriptions;
    // ((table, column), description)
    std::vector<std::pair<std::pair<std::string, std::string>, std::string>> column_descriptions;

    bool empty() const { return table_descriptions.empty() && column_descriptions.empty(); }

    // Parses the description document:
    //   tables: {name: {description: text, columns: {name: text}}}
    static SemanticEnrichment parse(std::string_view document);
    static SemanticEnrichment load(const std::string& path);
};

struct EnrichmentResult {
    SchemaModel schema;
    std::vector<std::string> diagnostics;  // one entry per unresolvable key
};

EnrichmentResult apply_enrichment(const SchemaModel& schema, const SemanticEnrichment& enrichment);

enum class RenderStyle { compact, full };

std::string render_schema_context(const SchemaModel& schema, RenderStyle style);
// Renders a single table block exactly as render_schema_context would.
std::string render_table_context(const Table& table, RenderStyle style);

}  // namespace dq
