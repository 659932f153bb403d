#include "admir/backend.hpp"

#include <nlohmann/json.hpp>

namespace admir::backend {

using nlohmann::json;

bool is_retryable(const std::exception& e) {
  if (const auto* be = dynamic_cast<const BackendError*>(&e)) return be->retryable();
  return false;
}

std::string to_string(ModelRole role) {
  switch (role) {
    case ModelRole::Controller: return "controller";
    case ModelRole::Captioner: return "captioner";
    case ModelRole::Expert: return "expert";
    case ModelRole::Refiner: return "refiner";
    case ModelRole::Judge: return "judge";
  }
  return "controller";
}

ModelRole role_from_string(const std::string& name) {
  const std::string n = to_lower(trim(name));
  if (n == "controller") return ModelRole::Controller;
  if (n == "captioner") return ModelRole::Captioner;
  if (n == "expert") return ModelRole::Expert;
  if (n == "refiner") return ModelRole::Refiner;
  if (n == "judge") return ModelRole::Judge;
  throw InputError("unknown model role: " + name);
}

void ChatRequest::validate() const {
  const bool has_user = std::any_of(messages.begin(), messages.end(), [](const ChatMessage& m) {
    return m.role == ChatMessage::Kind::User;
  });
  if (!has_user) throw std::invalid_argument("chat request needs at least one user message");
}

std::string ChatRequest::combined_content() const {
  std::string out;
  for (const auto& m : messages) {
    if (!out.empty()) out += "\n";
    out += m.content;
  }
  return out;
}

ChatRequest ChatRequest::simple(ModelRole role, std::string system, std::string user) {
  ChatRequest req;
  req.role = role;
  if (!system.empty())
    req.messages.push_back({ChatMessage::Kind::System, std::move(system)});
  req.messages.push_back({ChatMessage::Kind::User, std::move(user)});
  return req;
}

namespace {

// Finds the first balanced {...} starting at `start`. Returns npos pair on failure.
std::pair<size_t, size_t> balanced_object(const std::string& text, size_t start) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (size_t i = start; i < text.size(); ++i) {
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
    if (c == '}') {
      --depth;
      if (depth == 0) return {start, i + 1};
    }
  }
  return {std::string::npos, std::string::npos};
}

}  // namespace

void normalize_tool_call(ChatResponse& response) {
  if (response.tool_call) return;
  const std::string& text = response.text;
  size_t scan = 0;
  while (true) {
    const size_t brace = text.find('{', scan);
    if (brace == std::string::npos) return;
    const auto [begin, end] = balanced_object(text, brace);
    if (begin == std::string::npos) return;
    json parsed = json::parse(text.substr(begin, end - begin), nullptr, false);
    if (parsed.is_object() && parsed.contains("tool") && parsed["tool"].is_string()) {
      ToolCallPayload call;
      call.name = parsed["tool"].get<std::string>();
      call.arguments = parsed.value("arguments", json::object());
      std::string rest = text.substr(0, begin) + text.substr(end);
      // Drop any code-fence scaffolding left around the extracted object.
      size_t fence;
      while ((fence = rest.find("```")) != std::string::npos) {
        size_t line_end = rest.find('\n', fence);
        rest.erase(fence, line_end == std::string::npos ? std::string::npos : line_end - fence + 1);
      }
      response.text = trim(rest);
      response.tool_call = std::move(call);
      return;
    }
    scan = brace + 1;
  }
}

ChatResponse Backend::chat(const ChatRequest& request) {
  request.validate();
  ChatResponse response =
      with_retry([&] { return chat_impl(request); }, retry_, sleep_);
  normalize_tool_call(response);
  return response;
}

std::vector<Embedding> Backend::embed(const std::vector<std::string>& texts) {
  if (texts.empty()) throw std::invalid_argument("embed: empty input");
  for (const auto& t : texts)
    if (trim(t).empty()) throw std::invalid_argument("embed: blank input text");

  auto vectors = with_retry([&] { return embed_impl(texts); }, retry_, sleep_);
  if (vectors.size() != texts.size())
    throw MalformedResponse("embed: backend returned " + std::to_string(vectors.size()) +
                            " vectors for " + std::to_string(texts.size()) + " inputs");
  const int dim = embedding_dim();
  for (auto& v : vectors) {
    if (static_cast<int>(v.size()) != dim)
      throw DimensionMismatch("embed: expected dimension " + std::to_string(dim) + ", got " +
                              std::to_string(v.size()));
    l2_normalize(v);
  }
  return vectors;
}

}  // namespace admir::backend
