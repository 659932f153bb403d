#include "admir/jsonutil.hpp"

#include "admir/common.hpp"

namespace admir {

using nlohmann::json;

std::optional<json> find_json_object(const std::string& text) {
  size_t scan = 0;
  while (true) {
    const size_t brace = text.find('{', scan);
    if (brace == std::string::npos) return std::nullopt;

    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    size_t end = std::string::npos;
    for (size_t i = brace; i < text.size(); ++i) {
      const char c = text[i];
      if (in_string) {
        if (escaped)
          escaped = false;
        else if (c == '\\')
          escaped = true;
        else if (c == '"')
          in_string = false;
        continue;
      }
      if (c == '"') in_string = true;
      if (c == '{') ++depth;
      if (c == '}' && --depth == 0) {
        end = i + 1;
        break;
      }
    }
    if (end == std::string::npos) return std::nullopt;

    json parsed = json::parse(text.substr(brace, end - brace), nullptr, false);
    if (parsed.is_object()) return parsed;
    scan = brace + 1;
  }
}

std::optional<double> parse_timestamp(const json& value) {
  if (value.is_number()) return value.get<double>();
  if (!value.is_string()) return std::nullopt;
  std::string s = trim(value.get<std::string>());
  if (s.empty()) return std::nullopt;
  if (s.back() == 's' || s.back() == 'S') s.pop_back();
  s = trim(s);

  // mm:ss (or hh:mm:ss)
  if (s.find(':') != std::string::npos) {
    const auto parts = split(s, ':');
    double total = 0;
    for (const auto& part : parts) {
      try {
        total = total * 60 + std::stod(trim(part));
      } catch (const std::exception&) {
        return std::nullopt;
      }
    }
    return total;
  }

  try {
    size_t used = 0;
    const double t = std::stod(s, &used);
    if (used != s.size()) return std::nullopt;
    return t;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::vector<std::string> string_list(const json& value) {
  std::vector<std::string> out;
  if (value.is_string()) {
    const std::string s = trim(value.get<std::string>());
    if (!s.empty()) out.push_back(s);
  } else if (value.is_array()) {
    for (const auto& item : value)
      if (item.is_string() && !trim(item.get<std::string>()).empty())
        out.push_back(trim(item.get<std::string>()));
  }
  return out;
}

}  // namespace admir
