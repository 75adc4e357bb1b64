#pragma once

// Small string helpers shared across modules.

#include <string>
#include <string_view>
#include <vector>

namespace dq::text {

std::string to_lower(std::string_view s);
std::string to_upper(std::string_view s);
std::string_view trim(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool istarts_with(std::string_view s, std::string_view prefix);
bool iends_with(std::string_view s, std::string_view suffix);
std::vector<std::string> split_lines(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Case-insensitive glob with `*` and `?` wildcards.
bool glob_match(std::string_view pattern, std::string_view s);

// Replaces `{{name}}` placeholders. Unknown placeholders are left in place.
std::string render_template(std::string_view tmpl,
                            const std::vector<std::pair<std::string, std::string>>& vars);

struct FencedBlock {
    std::string language;  // lowercased info string, may be empty
    std::string body;
};

// All ``` fenced blocks in order of appearance. An unterminated trailing
// fence runs to end of input.
std::vector<FencedBlock> fenced_blocks(std::string_view s);

}  // namespace dq::text
