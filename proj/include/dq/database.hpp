#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

struct sqlite3;

namespace dq {

// A single SQL value. Blobs are carried as raw bytes in the string arm.
using Value = std::variant<std::monostate, std::int64_t, double, std::string>;

bool is_null(const Value& v);
// Display form: NULL, integers, shortest round-trip reals, raw strings.
std::string display(const Value& v);
// SQL literal form suitable for embedding in generated statements.
std::string to_sql_literal(const Value& v);
// Total order: NULL < numbers (compared numerically) < strings (bytewise).
int compare_values(const Value& a, const Value& b);
bool value_less(const Value& a, const Value& b);
bool rows_less(const std::vector<Value>& a, const std::vector<Value>& b);

struct ResultSet {
    std::vector<std::string> columns;
    std::vector<std::vector<Value>> rows;
    bool ordered = false;  // producing query had a top-level ORDER BY
};

struct QueryOptions {
    std::chrono::milliseconds timeout{30'000};
    // Reject statements the engine reports as writing (checked at prepare).
    bool require_read_only = true;
};

// Owning handle to an embedded SQLite database. Pipelines open connections
// read-only; fixtures and tests may open them writable.
class Database {
public:
    // Accepted URLs: `sqlite:///abs/path.db`, `sqlite://rel/path.db`,
    // `sqlite::memory:`, `:memory:`, or a bare filesystem path.
    static Database open(std::string_view url, bool read_only = true);

    Database(Database&&) noexcept;
    Database& operator=(Database&&) noexcept;
    ~Database();

    // Short name (file stem, or "memory").
    const std::string& name() const noexcept { return name_; }
    // Stable identity used as the catalog cache key.
    const std::string& identity() const noexcept { return identity_; }
    std::string dialect() const { return "sqlite"; }
    bool read_only() const noexcept { return read_only_; }

    ResultSet query(std::string_view sql, const QueryOptions& options = {}) const;

    // Runs a multi-statement script (fixtures). Fails on read-only handles.
    void exec_script(std::string_view sql);

    // True when the engine classifies `sql` as a single read-only statement.
    bool is_read_only_statement(std::string_view sql) const;

    sqlite3* handle() const noexcept { return db_; }

private:
    Database(sqlite3* db, std::string name, std::string identity, bool read_only);

    sqlite3* db_ = nullptr;
    std::string name_;
    std::string identity_;
    bool read_only_ = true;
};

}  // namespace dq
