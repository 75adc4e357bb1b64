#include "dq/catalog.hpp"

#include <sqlite3.h>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "dq/error.hpp"
#include "dq/sql/printer.hpp"
#include "dq/text.hpp"

namespace dq {

std::string_view to_string(Modality m) {
    switch (m) {
    case Modality::none: return "none";
    case Modality::image_url: return "image_url";
    case Modality::document_path: return "document_path";
    }
    return "none";
}

Modality modality_from_string(std::string_view s) {
    if (s == "none" || s.empty()) return Modality::none;
    if (s == "image_url") return Modality::image_url;
    if (s == "document_path") return Modality::document_path;
    throw Error(ErrorCode::invalid_argument, "unknown modality tag '" + std::string(s) + "'",
                std::string(s));
}

const Column* Table::find_column(std::string_view column) const {
    for (const auto& c : columns) {
        if (text::iequals(c.name, column)) return &c;
    }
    return nullptr;
}

bool operator==(const Column& a, const Column& b) {
    return a.name == b.name && a.data_type == b.data_type && a.nullable == b.nullable &&
           a.comment == b.comment && a.modality == b.modality;
}

bool operator==(const ForeignKey& a, const ForeignKey& b) {
    return a.local_columns == b.local_columns && a.referenced_table == b.referenced_table &&
           a.referenced_columns == b.referenced_columns;
}

bool operator==(const Table& a, const Table& b) {
    return a.name == b.name && a.columns == b.columns && a.primary_key == b.primary_key &&
           a.foreign_keys == b.foreign_keys && a.comment == b.comment && a.is_view == b.is_view;
}

bool operator==(const SchemaModel& a, const SchemaModel& b) {
    return a.database_name_ == b.database_name_ && a.tables_ == b.tables_;
}

SchemaModel::SchemaModel(std::string database_name, std::vector<Table> tables)
    : database_name_(std::move(database_name)), tables_(std::move(tables)) {
    const auto violation = [](const std::string& msg) {
        throw Error(ErrorCode::invalid_argument, "schema invariant violated: " + msg);
    };
    std::set<std::string> names;
    for (const auto& t : tables_) {
        if (t.name.empty()) violation("table with empty name");
        if (!names.insert(text::to_lower(t.name)).second)
            violation("duplicate table name '" + t.name + "'");
        std::set<std::string> cols;
        for (const auto& c : t.columns) {
            if (!cols.insert(text::to_lower(c.name)).second)
                violation("duplicate column '" + t.name + "." + c.name + "'");
        }
        for (const auto& pk : t.primary_key) {
            if (!t.find_column(pk))
                violation("primary key column '" + t.name + "." + pk + "' not in column list");
        }
    }
    for (const auto& t : tables_) {
        for (const auto& fk : t.foreign_keys) {
            if (fk.local_columns.empty() ||
                fk.local_columns.size() != fk.referenced_columns.size())
                violation("foreign key on '" + t.name + "' has mismatched column lists");
            const Table* ref = find_table(fk.referenced_table);
            if (!ref)
                violation("foreign key on '" + t.name + "' references unknown table '" +
                          fk.referenced_table + "'");
            for (const auto& c : fk.local_columns) {
                if (!t.find_column(c))
                    violation("foreign key column '" + t.name + "." + c + "' does not exist");
            }
            for (const auto& c : fk.referenced_columns) {
                if (!ref->find_column(c))
                    violation("foreign key target '" + ref->name + "." + c + "' does not exist");
            }
        }
    }
}

std::size_t SchemaModel::foreign_key_count() const {
    std::size_t n = 0;
    for (const auto& t : tables_) n += t.foreign_keys.size();
    return n;
}

const Table* SchemaModel::find_table(std::string_view name) const {
    for (const auto& t : tables_) {
        if (text::iequals(t.name, name)) return &t;
    }
    return nullptr;
}

const Table& SchemaModel::table(std::string_view name) const {
    if (const Table* t = find_table(name)) return *t;
    throw Error(ErrorCode::invalid_argument, "unknown table '" + std::string(name) + "'",
                std::string(name));
}

std::vector<std::string> SchemaModel::table_names() const {
    std::vector<std::string> names;
    names.reserve(tables_.size());
    for (const auto& t : tables_) names.push_back(t.name);
    return names;
}

// ---- introspection ------------------------------------------------------

namespace {

ResultSet catalog_query(const Database& db, const std::string& sql, const std::string& object) {
    try {
        return db.query(sql, QueryOptions{std::chrono::milliseconds(30'000), true});
    } catch (const Error& e) {
        throw Error(ErrorCode::catalog_failed,
                    "catalog query failed for " + object + ": " + e.what(), object);
    }
}

std::string text_of(const Value& v) { return is_null(v) ? std::string{} : display(v); }

}  // namespace

SchemaModel read_catalog(const Database& db) {
    const auto objects = catalog_query(
        db,
        "SELECT name, type FROM sqlite_master WHERE type IN ('table','view') AND name NOT LIKE "
        "'sqlite_%' ORDER BY rowid",
        "sqlite_master");

    std::vector<Table> tables;
    for (const auto& row : objects.rows) {
        Table t;
        t.name = text_of(row[0]);
        t.is_view = text_of(row[1]) == "view";
        const std::string quoted = sql::quote_literal(t.name);
        const auto info =
            catalog_query(db, "SELECT cid, name, type, \"notnull\", pk FROM pragma_table_info(" +
                                  quoted + ") ORDER BY cid",
                          "table '" + t.name + "'");
        std::vector<std::pair<std::int64_t, std::string>> pk;
        for (const auto& c : info.rows) {
            Column col;
            col.name = text_of(c[1]);
            col.data_type = text_of(c[2]);
            col.nullable = std::get<std::int64_t>(c[3]) == 0;
            const auto pk_pos = std::get<std::int64_t>(c[4]);
            if (pk_pos > 0 && !t.is_view) {
                pk.emplace_back(pk_pos, col.name);
                // SQLite reports INTEGER PRIMARY KEY columns as nullable.
                col.nullable = false;
            }
            t.columns.push_back(std::move(col));
        }
        std::sort(pk.begin(), pk.end());
        for (auto& [pos, name] : pk) t.primary_key.push_back(std::move(name));
        tables.push_back(std::move(t));
    }

    // Foreign keys need every table's primary key resolved first (implicit
    // REFERENCES targets default to the parent's primary key).
    for (auto& t : tables) {
        if (t.is_view) continue;
        const auto fks = catalog_query(
            db,
            "SELECT id, seq, \"table\", \"from\", \"to\" FROM pragma_foreign_key_list(" +
                sql::quote_literal(t.name) + ") ORDER BY id, seq",
            "foreign keys of '" + t.name + "'");
        std::int64_t current = -1;
        for (const auto& r : fks.rows) {
            const auto id = std::get<std::int64_t>(r[0]);
            if (id != current) {
                t.foreign_keys.emplace_back();
                t.foreign_keys.back().referenced_table = text_of(r[2]);
                current = id;
            }
            auto& fk = t.foreign_keys.back();
            fk.local_columns.push_back(text_of(r[3]));
            fk.referenced_columns.push_back(text_of(r[4]));
        }
        for (auto& fk : t.foreign_keys) {
            const bool implicit = std::all_of(fk.referenced_columns.begin(),
                                              fk.referenced_columns.end(),
                                              [](const auto& c) { return c.empty(); });
            if (!implicit) continue;
            const auto parent = std::find_if(tables.begin(), tables.end(), [&](const Table& p) {
                return text::iequals(p.name, fk.referenced_table);
            });
            if (parent == tables.end() || parent->primary_key.size() != fk.local_columns.size())
                throw Error(ErrorCode::catalog_failed,
                            "cannot resolve implicit foreign key target on '" + t.name + "'",
                            t.name);
            fk.referenced_columns = parent->primary_key;
        }
        // SQLite reports the parent table as written in the DDL; map it to the
        // catalog spelling so comparisons elsewhere stay exact.
        for (auto& fk : t.foreign_keys) {
            for (const auto& p : tables) {
                if (text::iequals(p.name, fk.referenced_table)) fk.referenced_table = p.name;
            }
        }
    }

    try {
        return SchemaModel(db.name(), std::move(tables));
    } catch (const Error& e) {
        throw Error(ErrorCode::catalog_failed, e.what(), db.name());
    }
}

std::shared_ptr<const SchemaModel> SchemaCache::introspect(const Database& db) {
    std::promise<std::shared_ptr<const SchemaModel>> promise;
    std::shared_future<std::shared_ptr<const SchemaModel>> future;
    {
        std::lock_guard lock(mu_);
        const auto it = entries_.find(db.identity());
        if (it != entries_.end()) {
            future = it->second;
        } else {
            future = promise.get_future().share();
            entries_.emplace(db.identity(), future);
            ++scans_;
            try {
                // Scanned under the lock: one catalog read per identity.
                promise.set_value(std::make_shared<const SchemaModel>(read_catalog(db)));
            } catch (...) {
                entries_.erase(db.identity());
                throw;
            }
        }
    }
    return future.get();
}

void SchemaCache::invalidate(const std::string& identity) {
    std::lock_guard lock(mu_);
    entries_.erase(identity);
}

void SchemaCache::clear() {
    std::lock_guard lock(mu_);
    entries_.clear();
}

std::size_t SchemaCache::scans() const {
    std::lock_guard lock(mu_);
    return scans_;
}

SchemaCache& SchemaCache::global() {
    static SchemaCache cache;
    return cache;
}

std::shared_ptr<const SchemaModel> introspect(const Database& db) {
    return SchemaCache::global().introspect(db);
}

// ---- enrichment ---------------------------------------------------------

SemanticEnrichment SemanticEnrichment::parse(std::string_view document) {
    SemanticEnrichment out;
    YAML::Node root;
    try {
        root = YAML::Load(std::string(document));
    } catch (const YAML::Exception& e) {
        throw Error(ErrorCode::input_data, std::string("malformed enrichment document: ") + e.what());
    }
    if (!root || root.IsNull()) return out;
    if (!root.IsMap() || !root["tables"])
        throw Error(ErrorCode::input_data, "enrichment document must have a top-level 'tables' map");
    const auto tables = root["tables"];
    if (tables.IsNull()) return out;
    if (!tables.IsMap())
        throw Error(ErrorCode::input_data, "'tables' must be a map of table name to entry");
    for (const auto& entry : tables) {
        const auto name = entry.first.as<std::string>();
        const auto& body = entry.second;
        if (body.IsScalar()) {
            out.table_descriptions.emplace_back(name, body.as<std::string>());
            continue;
        }
        if (!body.IsMap())
            throw Error(ErrorCode::input_data, "entry for table '" + name + "' must be a map");
        if (const auto d = body["description"]; d && !d.IsNull())
            out.table_descriptions.emplace_back(name, d.as<std::string>());
        if (const auto cols = body["columns"]; cols && !cols.IsNull()) {
            if (!cols.IsMap())
                throw Error(ErrorCode::input_data, "columns of '" + name + "' must be a map");
            for (const auto& c : cols) {
                out.column_descriptions.push_back(
                    {{name, c.first.as<std::string>()}, c.second.as<std::string>()});
            }
        }
    }
    return out;
}

SemanticEnrichment SemanticEnrichment::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot read enrichment file '" + path + "'", path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

EnrichmentResult apply_enrichment(const SchemaModel& schema, const SemanticEnrichment& enrichment) {
    std::vector<Table> tables = schema.tables();
    EnrichmentResult result;
    const auto find = [&](std::string_view name) -> Table* {
        for (auto& t : tables) {
            if (text::iequals(t.name, name)) return &t;
        }
        return nullptr;
    };
    for (const auto& [table, description] : enrichment.table_descriptions) {
        if (Table* t = find(table))
            t->comment = description;
        else
            result.diagnostics.push_back("unknown table '" + table + "'");
    }
    for (const auto& [key, description] : enrichment.column_descriptions) {
        Table* t = find(key.first);
        if (!t) {
            result.diagnostics.push_back("unknown table '" + key.first + "' for column '" +
                                         key.second + "'");
            continue;
        }
        auto it = std::find_if(t->columns.begin(), t->columns.end(),
                               [&](const Column& c) { return text::iequals(c.name, key.second); });
        if (it == t->columns.end()) {
            result.diagnostics.push_back("unknown column '" + key.first + "." + key.second + "'");
            continue;
        }
        it->comment = description;
    }
    result.schema = SchemaModel(schema.database_name(), std::move(tables));
    return result;
}

// ---- rendering ----------------------------------------------------------

namespace {

std::string fk_text(const Table& t, const ForeignKey& fk) {
    return t.name + "(" + text::join(fk.local_columns, ", ") + ") references " +
           fk.referenced_table + "(" + text::join(fk.referenced_columns, ", ") + ")";
}

bool in_pk(const Table& t, const std::string& column) {
    return std::any_of(t.primary_key.begin(), t.primary_key.end(),
                       [&](const auto& k) { return text::iequals(k, column); });
}

}  // namespace

std::string render_table_context(const Table& t, RenderStyle style) {
    std::string out;
    if (style == RenderStyle::compact) {
        out = (t.is_view ? "View " : "Table ") + t.name + ": ";
        for (std::size_t i = 0; i < t.columns.size(); ++i) {
            const auto& c = t.columns[i];
            if (i) out += ", ";
            out += c.name;
            if (!c.data_type.empty()) out += " " + c.data_type;
            if (in_pk(t, c.name)) out += " [PK]";
        }
        for (const auto& fk : t.foreign_keys) out += "; FK " + fk_text(t, fk);
        out += "\n";
        return out;
    }
    out = (t.is_view ? "View " : "Table ") + t.name + "\n";
    if (t.comment && !t.comment->empty()) out += "  Description: " + *t.comment + "\n";
    out += "  Columns:\n";
    for (const auto& c : t.columns) {
        out += "    - " + c.name;
        if (!c.data_type.empty()) out += " " + c.data_type;
        if (!c.nullable) out += " NOT NULL";
        if (c.comment && !c.comment->empty()) out += " -- " + *c.comment;
        out += "\n";
    }
    if (!t.primary_key.empty()) out += "  Primary key: (" + text::join(t.primary_key, ", ") + ")\n";
    for (const auto& fk : t.foreign_keys) out += "  Foreign key: " + fk_text(t, fk) + "\n";
    return out;
}

std::string render_schema_context(const SchemaModel& schema, RenderStyle style) {
    std::string out;
    for (std::size_t i = 0; i < schema.tables().size(); ++i) {
        if (i && style == RenderStyle::full) out += "\n";
        out += render_table_context(schema.tables()[i], style);
    }
    return out;
}

}  // namespace dq
