#pragma once

#include <json.hpp>

#include <variant>

#include "dq/database.hpp"

namespace dq::detail {

inline nlohmann::ordered_json value_json(const Value& v) {
    if (std::holds_alternative<std::monostate>(v)) return nullptr;
    if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
    if (const auto* d = std::get_if<double>(&v)) return *d;
    return std::get<std::string>(v);
}

inline nlohmann::ordered_json result_json(const ResultSet& rs) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : rs.rows) {
        nlohmann::ordered_json r = nlohmann::ordered_json::array();
        for (const auto& v : row) r.push_back(value_json(v));
        rows.push_back(std::move(r));
    }
    return {{"columns", rs.columns}, {"ordered", rs.ordered}, {"row_count", rs.rows.size()},
            {"rows", std::move(rows)}};
}

}  // namespace dq::detail
