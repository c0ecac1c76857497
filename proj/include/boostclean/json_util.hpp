#pragma once

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "value.hpp"

namespace boostclean {

/// Missing -> null, Number -> {"n": x}, Text -> {"s": "..."}.
inline nlohmann::json value_to_json(const Value& v) {
    if (v.is_missing()) return nullptr;
    if (v.is_number()) return {{"n", v.as_number()}};
    return {{"s", v.as_text()}};
}

inline Value value_from_json(const nlohmann::json& j) {
    if (j.is_null()) return Value::missing();
    if (j.contains("n")) return Value::number(j.at("n").get<double>());
    if (j.contains("s")) return Value::text(j.at("s").get<std::string>());
    throw ValidationError("malformed value in json");
}

/// Plain JSON rendering for reports: numbers as numbers, text as strings.
inline nlohmann::json value_to_report(const Value& v) {
    if (v.is_missing()) return nullptr;
    if (v.is_number()) return v.as_number();
    return v.as_text();
}

} // namespace boostclean
