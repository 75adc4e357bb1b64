#include <algorithm>
#include <array>
#include <cctype>
#include <optional>

#include "dq/error.hpp"
#include "dq/sql/lexer.hpp"
#include "dq/sql/parser.hpp"
#include "dq/sqp.hpp"
#include "dq/text.hpp"

namespace dq {

namespace {

struct Word {
    std::size_t pos;
    std::size_t end;
    std::string upper;
};

bool word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

std::vector<Word> scan_words(std::string_view s) {
    std::vector<Word> out;
    std::size_t i = 0;
    while (i < s.size()) {
        if (!word_char(s[i])) {
            ++i;
            continue;
        }
        const std::size_t start = i;
        while (i < s.size() && word_char(s[i])) ++i;
        out.push_back({start, i, text::to_upper(s.substr(start, i - start))});
    }
    return out;
}

bool one_of(std::string_view w, std::initializer_list<std::string_view> options) {
    return std::find(options.begin(), options.end(), w) != options.end();
}

bool at_statement_start(std::string_view s, std::size_t pos) {
    const auto before = text::trim(s.substr(0, pos));
    return before.empty() || before.back() == ';';
}

// Whether words[i] begins a data-modifying or definition statement. Verbs
// are matched with the words that must follow them so that ordinary prose
// ("update the list", "replace(x)") does not trip the guardrail.
bool is_write_statement(const std::vector<Word>& w, std::size_t i, std::string_view s) {
    const std::string& verb = w[i].upper;
    if (!sql::is_write_verb(verb)) return false;
    const auto next = [&](std::size_t k) -> std::string_view {
        return i + k < w.size() ? std::string_view(w[i + k].upper) : std::string_view{};
    };
    const auto followed_by_paren = [&] {
        const auto rest = text::trim(s.substr(w[i].end));
        return !rest.empty() && rest.front() == '(';
    };
    if (at_statement_start(s, w[i].pos) && !followed_by_paren()) return true;

    if (one_of(verb, {"DROP", "CREATE", "ALTER"}))
        return one_of(next(1), {"TABLE", "VIEW", "INDEX", "DATABASE", "SCHEMA", "TRIGGER",
                                "PROCEDURE", "FUNCTION", "USER", "ROLE", "SEQUENCE", "TEMPORARY",
                                "TEMP", "UNIQUE", "OR", "IF", "VIRTUAL", "EVENT", "COLUMN",
                                "CONSTRAINT", "MATERIALIZED", "TABLESPACE"});
    if (verb == "DELETE") return next(1) == "FROM" || next(2) == "FROM";
    if (verb == "INSERT") return one_of(next(1), {"INTO", "OR", "IGNORE", "OVERWRITE"});
    if (one_of(verb, {"REPLACE", "MERGE", "UPSERT"})) return next(1) == "INTO";
    if (verb == "UPDATE") return next(2) == "SET" || next(3) == "SET";
    if (verb == "TRUNCATE") {
        if (next(1) == "TABLE") return true;
        if (i + 1 >= w.size()) return false;
        const auto rest = text::trim(s.substr(w[i + 1].end));
        return rest.empty() || rest.front() == ';';
    }
    if (one_of(verb, {"RENAME", "OPTIMIZE", "LOCK"})) return one_of(next(1), {"TABLE", "TABLES"});
    if (verb == "UNLOCK") return next(1) == "TABLES";
    if (one_of(verb, {"ATTACH", "DETACH"})) return next(1) == "DATABASE";
    if (one_of(verb, {"GRANT", "REVOKE"})) {
        for (std::size_t k = 1; k <= 6 && i + k < w.size(); ++k)
            if (w[i + k].upper == "ON") return true;
        return false;
    }
    if (verb == "LOAD") return next(1) == "DATA" || next(1) == "XML";
    if (verb == "COMMENT") return next(1) == "ON";
    if (verb == "PRAGMA") {
        if (i + 1 >= w.size()) return false;
        const auto rest = text::trim(s.substr(w[i + 1].end));
        return rest.empty() || rest.front() == '=' || rest.front() == '(' || rest.front() == ';';
    }
    return false;
}

std::optional<std::string> first_write_statement(std::string_view s) {
    const auto words = scan_words(s);
    for (std::size_t i = 0; i < words.size(); ++i)
        if (is_write_statement(words, i, s)) return words[i].upper;
    return std::nullopt;
}

[[noreturn]] void forbid(const std::string& verb) {
    throw Error(ErrorCode::forbidden_statement,
                "FORBIDDEN_STATEMENT: " + verb + " is not allowed; only read-only queries are accepted",
                verb);
}

bool sql_fence(std::string_view lang) {
    return one_of(lang, {"", "sql", "sqlite", "mysql", "postgresql", "postgres", "psql", "tsql",
                         "plsql", "mariadb"});
}

struct Extracted {
    sql::Query query;
    std::size_t begin = 0;  // statement text within the candidate region
    std::size_t end = 0;
    std::size_t consumed = 0;  // through the terminating ';' if any
    bool terminated = false;
};

// Attempts to read one statement starting at the beginning of `region`,
// shrinking at line boundaries when trailing prose defeats the parse.
std::optional<Extracted> extract_statement(std::string_view region, std::string& failure) {
    std::vector<std::size_t> ends{region.size()};
    for (std::size_t p = region.rfind('\n'); p != std::string_view::npos && p > 0;
         p = region.rfind('\n', p - 1))
        ends.push_back(p);
    for (const std::size_t end : ends) {
        const auto part = region.substr(0, end);
        std::vector<sql::Token> tokens;
        try {
            tokens = sql::tokenize(part, true);
        } catch (const Error& e) {
            if (failure.empty()) failure = e.what();
            continue;
        }
        if (tokens.empty()) continue;
        try {
            Extracted out;
            out.query = sql::parse_query_tokens(tokens);
            out.terminated = tokens.back().is_symbol(";");
            const auto& last = out.terminated && tokens.size() > 1 ? tokens[tokens.size() - 2]
                                                                  : tokens.back();
            out.begin = tokens.front().offset;
            out.end = last.offset + last.length;
            out.consumed = tokens.back().offset + tokens.back().length;
            return out;
        } catch (const sql::ParseError& e) {
            if (!e.forbidden_verb().empty()) forbid(e.forbidden_verb());
            if (failure.empty()) failure = e.what();
        }
    }
    return std::nullopt;
}

bool looks_like_cte(std::string_view region) {
    try {
        const auto t = sql::tokenize(region.substr(0, std::min<std::size_t>(region.size(), 256)));
        std::size_t i = 1;
        if (i < t.size() && t[i].is_word("RECURSIVE")) ++i;
        if (i + 1 >= t.size()) return false;
        if (t[i].kind != sql::TokenKind::identifier && t[i].kind != sql::TokenKind::quoted_identifier)
            return false;
        return t[i + 1].is_word("AS") || t[i + 1].is_symbol("(");
    } catch (const Error&) {
        return false;
    }
}

bool has_into(const sql::Query& q) {
    if (!q.core.into.empty()) return true;
    return std::any_of(q.compounds.begin(), q.compounds.end(),
                       [](const sql::Compound& c) { return !c.core.into.empty(); });
}

}  // namespace

SanitizedSql sanitize(std::string_view raw, std::string_view dialect) {
    std::string_view payload = raw;
    std::string_view after_fence;
    const auto blocks = text::fenced_blocks(raw);
    std::string fenced_body;
    if (!blocks.empty()) {
        const text::FencedBlock* chosen = nullptr;
        for (const auto& b : blocks) {
            if (!text::trim(b.body).empty() && sql_fence(b.language)) {
                chosen = &b;
                break;
            }
        }
        if (!chosen) {
            for (const auto& b : blocks) {
                if (!text::trim(b.body).empty()) {
                    chosen = &b;
                    break;
                }
            }
        }
        if (chosen) {
            const auto at = raw.find(chosen->body);
            const auto prefix = raw.substr(0, at == std::string_view::npos ? 0 : at);
            if (auto verb = first_write_statement(prefix)) forbid(*verb);
            if (at != std::string_view::npos) after_fence = raw.substr(at + chosen->body.size());
            fenced_body = chosen->body;
            payload = fenced_body;
        }
    }

    std::string failure;
    bool saw_query_head = false;
    const auto words = scan_words(payload);
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (is_write_statement(words, i, payload)) forbid(words[i].upper);
        const auto& w = words[i];
        if (w.upper != "SELECT" && w.upper != "WITH") continue;
        const auto region = payload.substr(w.pos);
        if (w.upper == "WITH" && !looks_like_cte(region)) continue;
        saw_query_head = true;
        auto stmt = extract_statement(region, failure);
        if (!stmt) continue;

        if (has_into(stmt->query)) forbid("INTO");
        const auto rest = region.substr(stmt->consumed);
        if (stmt->terminated) {
            const auto rest_words = scan_words(rest);
            for (std::size_t k = 0; k < rest_words.size(); ++k) {
                const auto& rw = rest_words[k];
                const bool head = at_statement_start(rest, rw.pos) &&
                                  (rw.upper == "SELECT" ||
                                   (rw.upper == "WITH" && looks_like_cte(rest.substr(rw.pos))));
                if (head || is_write_statement(rest_words, k, rest))
                    throw Error(ErrorCode::multi_statement,
                                "MULTI_STATEMENT: payload contains more than one statement",
                                rw.upper);
            }
        } else if (auto verb = first_write_statement(rest)) {
            throw Error(ErrorCode::multi_statement,
                        "MULTI_STATEMENT: payload contains more than one statement", *verb);
        }
        if (auto verb = first_write_statement(after_fence))
            throw Error(ErrorCode::multi_statement,
                        "MULTI_STATEMENT: payload contains more than one statement", *verb);

        std::string text(text::trim(region.substr(stmt->begin, stmt->end - stmt->begin)));
        return SanitizedSql(std::move(text), std::string(dialect), std::string(raw),
                            std::move(stmt->query));
    }
    if (saw_query_head)
        throw Error(ErrorCode::sql_parse_failure, "PARSE_FAILURE: " + failure);
    throw Error(ErrorCode::no_select_found, "NO_SELECT_FOUND: no SELECT statement in model output");
}

}  // namespace dq
