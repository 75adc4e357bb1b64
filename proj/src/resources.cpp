#include "dq/resources.hpp"

#include "dq/error.hpp"
#include "dq/text.hpp"

namespace dq {

std::string_view resources::get(std::string_view name) {
    const auto& table = all();
    const auto it = table.find(std::string(name));
    if (it == table.end())
        throw Error(ErrorCode::invalid_argument, "unknown resource '" + std::string(name) + "'",
                    std::string(name));
    return it->second;
}

Prompt render_prompt(std::string_view template_id,
                     const std::vector<std::pair<std::string, std::string>>& vars) {
    const std::string_view raw = resources::get("prompts/" + std::string(template_id) + ".txt");
    Prompt out;
    out.template_id = std::string(template_id);
    std::string* section = nullptr;
    for (const auto& line : text::split_lines(raw)) {
        if (line == "[system]") {
            section = &out.system;
            continue;
        }
        if (line == "[user]") {
            section = &out.user;
            continue;
        }
        if (!section) continue;
        if (!section->empty()) *section += '\n';
        *section += line;
    }
    out.system = text::render_template(text::trim(out.system), vars);
    out.user = text::render_template(text::trim(out.user), vars);
    return out;
}

}  // namespace dq
