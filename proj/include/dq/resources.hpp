#pragma once

// Text resources (prompt templates, rule tables) compiled into the library.

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dq::resources {

const std::map<std::string, std::string_view>& all();

// Throws Error(invalid_argument) for an unknown name.
std::string_view get(std::string_view name);

}  // namespace dq::resources

namespace dq {

// A rendered prompt template: `[system]` and `[user]` sections with
// `{{name}}` placeholders substituted.
struct Prompt {
    std::string template_id;
    std::string system;
    std::string user;
};

Prompt render_prompt(std::string_view template_id,
                     const std::vector<std::pair<std::string, std::string>>& vars);

}  // namespace dq
