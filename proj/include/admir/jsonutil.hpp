#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

namespace admir {

/// Extracts the first balanced JSON object embedded in free text (model
/// replies often wrap JSON in prose or code fences). Returns nullopt when no
/// parseable object exists.
std::optional<nlohmann::json> find_json_object(const std::string& text);

/// Lenient timestamp parse: accepts numbers, "12", "12.5", "12.5s", "mm:ss".
std::optional<double> parse_timestamp(const nlohmann::json& value);

/// String-or-array-of-strings field, normalized to a list.
std::vector<std::string> string_list(const nlohmann::json& value);

}  // namespace admir
