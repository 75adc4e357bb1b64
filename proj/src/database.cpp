#include "dq/database.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <filesystem>
#include <memory>
#include <utility>

#include "dq/error.hpp"
#include "dq/text.hpp"

namespace dq {

bool is_null(const Value& v) { return std::holds_alternative<std::monostate>(v); }

std::string display(const Value& v) {
    if (std::holds_alternative<std::monostate>(v)) return "NULL";
    if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
    if (const auto* d = std::get_if<double>(&v)) {
        char buf[64];
        const auto res = std::to_chars(buf, buf + sizeof(buf), *d);
        return std::string(buf, res.ptr);
    }
    return std::get<std::string>(v);
}

std::string to_sql_literal(const Value& v) {
    if (const auto* s = std::get_if<std::string>(&v)) {
        std::string out = "'";
        for (char c : *s) {
            if (c == '\'') out += '\'';
            out += c;
        }
        return out + "'";
    }
    return display(v);
}

int compare_values(const Value& a, const Value& b) {
    const auto rank = [](const Value& v) {
        if (is_null(v)) return 0;
        if (std::holds_alternative<std::string>(v)) return 2;
        return 1;
    };
    const int ra = rank(a), rb = rank(b);
    if (ra != rb) return ra < rb ? -1 : 1;
    if (ra == 0) return 0;
    if (ra == 2) {
        const int c = std::get<std::string>(a).compare(std::get<std::string>(b));
        return c < 0 ? -1 : c > 0 ? 1 : 0;
    }
    const auto* ia = std::get_if<std::int64_t>(&a);
    const auto* ib = std::get_if<std::int64_t>(&b);
    if (ia && ib) return *ia < *ib ? -1 : *ia > *ib ? 1 : 0;
    const double da = ia ? static_cast<double>(*ia) : std::get<double>(a);
    const double db = ib ? static_cast<double>(*ib) : std::get<double>(b);
    return da < db ? -1 : da > db ? 1 : 0;
}

bool value_less(const Value& a, const Value& b) { return compare_values(a, b) < 0; }

bool rows_less(const std::vector<Value>& a, const std::vector<Value>& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), value_less);
}

namespace {

struct DeadlineGuard {
    std::chrono::steady_clock::time_point deadline;
    bool expired = false;
};

int progress_callback(void* arg) {
    auto* guard = static_cast<DeadlineGuard*>(arg);
    if (std::chrono::steady_clock::now() > guard->deadline) {
        guard->expired = true;
        return 1;
    }
    return 0;
}

std::atomic<std::uint64_t> g_memory_counter{0};

}  // namespace

Database::Database(sqlite3* db, std::string name, std::string identity, bool read_only)
    : db_(db), name_(std::move(name)), identity_(std::move(identity)), read_only_(read_only) {}

Database::Database(Database&& other) noexcept
    : db_(std::exchange(other.db_, nullptr)),
      name_(std::move(other.name_)),
      identity_(std::move(other.identity_)),
      read_only_(other.read_only_) {}

Database& Database::operator=(Database&& other) noexcept {
    if (this != &other) {
        if (db_) sqlite3_close_v2(db_);
        db_ = std::exchange(other.db_, nullptr);
        name_ = std::move(other.name_);
        identity_ = std::move(other.identity_);
        read_only_ = other.read_only_;
    }
    return *this;
}

Database::~Database() {
    if (db_) sqlite3_close_v2(db_);
}

Database Database::open(std::string_view url, bool read_only) {
    std::string path;
    if (url == "sqlite::memory:" || url == ":memory:") {
        path = ":memory:";
    } else if (text::istarts_with(url, "sqlite:///")) {
        path = std::string(url.substr(9));
    } else if (text::istarts_with(url, "sqlite://")) {
        path = std::string(url.substr(9));
    } else if (url.find("://") != std::string_view::npos) {
        throw Error(ErrorCode::connection_failed,
                    "unsupported database URL scheme in '" + std::string(url) +
                        "' (this build supports sqlite)",
                    std::string(url));
    } else {
        path = std::string(url);
    }
    if (path.empty())
        throw Error(ErrorCode::connection_failed, "empty database path", std::string(url));

    const bool memory = path == ":memory:";
    if (!memory && !std::filesystem::exists(path)) {
        if (read_only)
            throw Error(ErrorCode::connection_failed, "database file not found: " + path, path);
    }
    int flags = SQLITE_OPEN_FULLMUTEX;
    flags |= read_only && !memory ? SQLITE_OPEN_READONLY : (SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE);
    sqlite3* raw = nullptr;
    const int rc = sqlite3_open_v2(path.c_str(), &raw, flags, nullptr);
    if (rc != SQLITE_OK) {
        std::string msg = raw ? sqlite3_errmsg(raw) : sqlite3_errstr(rc);
        if (raw) sqlite3_close_v2(raw);
        throw Error(ErrorCode::connection_failed, "cannot open database '" + path + "': " + msg,
                    path);
    }
    sqlite3_extended_result_codes(raw, 1);
    if (memory) {
        const auto id = ":memory:#" + std::to_string(++g_memory_counter);
        return Database(raw, "memory", id, false);
    }
    std::error_code ec;
    const auto canonical = std::filesystem::weakly_canonical(path, ec);
    return Database(raw, std::filesystem::path(path).stem().string(),
                    ec ? path : canonical.string(), read_only);
}

ResultSet Database::query(std::string_view sql, const QueryOptions& options) const {
    sqlite3_stmt* raw = nullptr;
    const char* tail = nullptr;
    int rc = sqlite3_prepare_v2(db_, sql.data(), static_cast<int>(sql.size()), &raw, &tail);
    std::unique_ptr<sqlite3_stmt, decltype(&sqlite3_finalize)> stmt(raw, &sqlite3_finalize);
    if (rc != SQLITE_OK)
        throw Error(ErrorCode::sql_runtime, std::string("SQL error: ") + sqlite3_errmsg(db_),
                    sqlite3_errmsg(db_));
    if (!stmt) throw Error(ErrorCode::sql_runtime, "SQL error: empty statement");
    if (tail && !text::trim(std::string_view(tail, sql.data() + sql.size() - tail)).empty()) {
        const auto rest = text::trim(std::string_view(tail, sql.data() + sql.size() - tail));
        if (rest != ";")
            throw Error(ErrorCode::sql_runtime, "SQL error: trailing statement not allowed");
    }
    if (options.require_read_only && !sqlite3_stmt_readonly(stmt.get()))
        throw Error(ErrorCode::forbidden_statement, "statement is not read-only", "WRITE");

    ResultSet out;
    const int ncols = sqlite3_column_count(stmt.get());
    out.columns.reserve(static_cast<std::size_t>(ncols));
    for (int c = 0; c < ncols; ++c) {
        const char* name = sqlite3_column_name(stmt.get(), c);
        out.columns.emplace_back(name ? name : "");
    }

    DeadlineGuard guard{std::chrono::steady_clock::now() + options.timeout};
    sqlite3_progress_handler(db_, 1000, &progress_callback, &guard);
    struct ResetHandler {
        sqlite3* db;
        ~ResetHandler() { sqlite3_progress_handler(db, 0, nullptr, nullptr); }
    } reset{db_};

    while ((rc = sqlite3_step(stmt.get())) == SQLITE_ROW) {
        std::vector<Value> row;
        row.reserve(static_cast<std::size_t>(ncols));
        for (int c = 0; c < ncols; ++c) {
            switch (sqlite3_column_type(stmt.get(), c)) {
            case SQLITE_NULL: row.emplace_back(std::monostate{}); break;
            case SQLITE_INTEGER:
                row.emplace_back(static_cast<std::int64_t>(sqlite3_column_int64(stmt.get(), c)));
                break;
            case SQLITE_FLOAT: row.emplace_back(sqlite3_column_double(stmt.get(), c)); break;
            default: {
                const auto* data = static_cast<const char*>(sqlite3_column_blob(stmt.get(), c));
                const int len = sqlite3_column_bytes(stmt.get(), c);
                row.emplace_back(std::string(data ? data : "", static_cast<std::size_t>(len)));
            }
            }
        }
        out.rows.push_back(std::move(row));
    }
    if (rc != SQLITE_DONE) {
        if (guard.expired || (rc & 0xff) == SQLITE_INTERRUPT)
            throw Error(ErrorCode::timeout,
                        "query exceeded timeout of " + std::to_string(options.timeout.count()) +
                            " ms");
        throw Error(ErrorCode::sql_runtime, std::string("SQL error: ") + sqlite3_errmsg(db_),
                    sqlite3_errmsg(db_));
    }
    return out;
}

void Database::exec_script(std::string_view sql) {
    if (read_only_) throw Error(ErrorCode::invalid_argument, "database opened read-only");
    char* err = nullptr;
    const std::string owned(sql);
    if (sqlite3_exec(db_, owned.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
        std::string msg = err ? err : "unknown error";
        sqlite3_free(err);
        throw Error(ErrorCode::sql_runtime, "script failed: " + msg, msg);
    }
}

bool Database::is_read_only_statement(std::string_view sql) const {
    sqlite3_stmt* raw = nullptr;
    const char* tail = nullptr;
    if (sqlite3_prepare_v2(db_, sql.data(), static_cast<int>(sql.size()), &raw, &tail) !=
        SQLITE_OK)
        return false;
    std::unique_ptr<sqlite3_stmt, decltype(&sqlite3_finalize)> stmt(raw, &sqlite3_finalize);
    if (!stmt) return false;
    if (tail) {
        const auto rest = text::trim(std::string_view(tail, sql.data() + sql.size() - tail));
        if (!rest.empty() && rest != ";") return false;
    }
    return sqlite3_stmt_readonly(stmt.get()) != 0;
}

}  // namespace dq
