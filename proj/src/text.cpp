#include "dq/text.hpp"

#include <algorithm>
#include <cctype>

#include "dq/error.hpp"

namespace dq {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::invalid_argument: return "INVALID_ARGUMENT";
    case ErrorCode::connection_failed: return "CONNECTION_FAILED";
    case ErrorCode::catalog_failed: return "CATALOG_FAILED";
    case ErrorCode::sql_parse_failure: return "PARSE_FAILURE";
    case ErrorCode::no_select_found: return "NO_SELECT_FOUND";
    case ErrorCode::forbidden_statement: return "FORBIDDEN_STATEMENT";
    case ErrorCode::multi_statement: return "MULTI_STATEMENT";
    case ErrorCode::sql_runtime: return "SQL_RUNTIME";
    case ErrorCode::timeout: return "TIMEOUT";
    case ErrorCode::unmatched_request: return "UNMATCHED_REQUEST";
    case ErrorCode::retries_exhausted: return "RETRIES_EXHAUSTED";
    case ErrorCode::auth_failure: return "AUTH_FAILURE";
    case ErrorCode::payload_too_large: return "PAYLOAD_TOO_LARGE";
    case ErrorCode::transport: return "TRANSPORT";
    case ErrorCode::bad_response: return "BAD_RESPONSE";
    case ErrorCode::asset_unavailable: return "ASSET_UNAVAILABLE";
    case ErrorCode::empty_completion: return "EMPTY_COMPLETION";
    case ErrorCode::plan_invalid: return "PLAN_INVALID";
    case ErrorCode::empty_schema: return "EMPTY_SCHEMA";
    case ErrorCode::fragment_invalid: return "FRAGMENT_INVALID";
    case ErrorCode::no_join_path: return "NO_JOIN_PATH";
    case ErrorCode::missing_primary_key: return "MISSING_PRIMARY_KEY";
    case ErrorCode::checklist_invalid: return "CHECKLIST_INVALID";
    case ErrorCode::label_invalid: return "LABEL_INVALID";
    case ErrorCode::empty_input: return "EMPTY_INPUT";
    case ErrorCode::input_data: return "INPUT_DATA";
    case ErrorCode::io: return "IO";
    }
    return "UNKNOWN";
}

}  // namespace dq

namespace dq::text {

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string to_upper(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return out;
}

std::string_view trim(std::string_view s) {
    const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](unsigned char x, unsigned char y) {
               return std::tolower(x) == std::tolower(y);
           });
}

bool istarts_with(std::string_view s, std::string_view prefix) {
    return s.size() >= prefix.size() && iequals(s.substr(0, prefix.size()), prefix);
}

bool iends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && iequals(s.substr(s.size() - suffix.size()), suffix);
}

std::vector<std::string> split_lines(std::string_view s) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto nl = s.find('\n', start);
        auto line = s.substr(start, nl == std::string_view::npos ? s.npos : nl - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.emplace_back(line);
        if (nl == std::string_view::npos) break;
        start = nl + 1;
    }
    return lines;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

bool glob_match(std::string_view pattern, std::string_view s) {
    // Iterative wildcard match with single backtrack point.
    std::size_t p = 0, i = 0, star = std::string_view::npos, mark = 0;
    const auto eq = [](char a, char b) {
        return std::tolower(static_cast<unsigned char>(a)) ==
               std::tolower(static_cast<unsigned char>(b));
    };
    while (i < s.size()) {
        if (p < pattern.size() && (pattern[p] == '?' || eq(pattern[p], s[i]))) {
            ++p;
            ++i;
        } else if (p < pattern.size() && pattern[p] == '*') {
            star = p++;
            mark = i;
        } else if (star != std::string_view::npos) {
            p = star + 1;
            i = ++mark;
        } else {
            return false;
        }
    }
    while (p < pattern.size() && pattern[p] == '*') ++p;
    return p == pattern.size();
}

std::string render_template(std::string_view tmpl,
                            const std::vector<std::pair<std::string, std::string>>& vars) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        const auto open = tmpl.find("{{", pos);
        if (open == std::string_view::npos) {
            out.append(tmpl.substr(pos));
            break;
        }
        const auto close = tmpl.find("}}", open + 2);
        if (close == std::string_view::npos) {
            out.append(tmpl.substr(pos));
            break;
        }
        out.append(tmpl.substr(pos, open - pos));
        const auto key = trim(tmpl.substr(open + 2, close - open - 2));
        const auto it = std::find_if(vars.begin(), vars.end(),
                                     [&](const auto& kv) { return kv.first == key; });
        if (it != vars.end())
            out += it->second;
        else
            out.append(tmpl.substr(open, close + 2 - open));
        pos = close + 2;
    }
    return out;
}

std::vector<FencedBlock> fenced_blocks(std::string_view s) {
    std::vector<FencedBlock> blocks;
    std::size_t pos = 0;
    while (true) {
        const auto open = s.find("```", pos);
        if (open == std::string_view::npos) break;
        auto info_end = s.find('\n', open + 3);
        FencedBlock block;
        std::size_t body_start;
        if (info_end == std::string_view::npos) {
            // Single-line fence such as ```SELECT 1```.
            info_end = s.size();
        }
        const auto info = trim(s.substr(open + 3, info_end - open - 3));
        const auto inline_close = info.find("```");
        if (inline_close != std::string_view::npos) {
            // ```sql SELECT 1``` on one line: the first word is a language tag
            // only when followed by more text.
            auto inner = trim(info.substr(0, inline_close));
            const auto sp = inner.find_first_of(" \t");
            if (sp != std::string_view::npos) {
                const auto word = inner.substr(0, sp);
                if (iequals(word, "sql") || iequals(word, "json") || iequals(word, "plan")) {
                    block.language = to_lower(word);
                    inner = trim(inner.substr(sp));
                }
            }
            block.body = std::string(inner);
            blocks.push_back(std::move(block));
            pos = static_cast<std::size_t>(info.data() - s.data()) + inline_close + 3;
            continue;
        }
        const bool info_is_tag = info.find_first_of(" \t") == std::string_view::npos;
        if (info_is_tag) {
            block.language = to_lower(info);
            body_start = std::min(info_end + 1, s.size());
        } else {
            // Text right after the fence on the same line is body, not a tag.
            body_start = open + 3;
        }
        const auto close = s.find("```", body_start);
        const auto body_end = close == std::string_view::npos ? s.size() : close;
        block.body = std::string(s.substr(body_start, body_end - body_start));
        blocks.push_back(std::move(block));
        if (close == std::string_view::npos) break;
        pos = close + 3;
    }
    return blocks;
}

}  // namespace dq::text
