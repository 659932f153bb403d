#include "admir/mock_backend.hpp"

#include <nlohmann/json.hpp>

namespace admir::backend {

using nlohmann::json;

bool MockMatcher::matches(const ChatRequest& request) const {
  if (role && *role != request.role) return false;
  if (contains && request.combined_content().find(*contains) == std::string::npos) return false;
  if (image_contains) {
    const bool hit = std::any_of(request.images.begin(), request.images.end(),
                                 [&](const ImageRef& img) {
                                   return img.path.find(*image_contains) != std::string::npos;
                                 });
    if (!hit) return false;
  }
  return true;
}

MockBackend::MockBackend(Mode mode, int embedding_dim)
    : Backend(RetryPolicy{.max_retries = 0}), mode_(mode), embedding_dim_(embedding_dim) {}

namespace {

ChatResponse response_from_json(const json& spec) {
  ChatResponse r;
  r.text = spec.value("text", "");
  r.finish_reason = spec.value("finish_reason", "stop");
  if (spec.contains("tool")) {
    ToolCallPayload call;
    call.name = spec.at("tool").get<std::string>();
    call.arguments = spec.value("arguments", json::object());
    r.tool_call = std::move(call);
  }
  return r;
}

}  // namespace

MockBackend MockBackend::from_json(const json& spec) {
  const std::string mode_name = spec.value("mode", "first_match");
  Mode mode;
  if (mode_name == "ordered")
    mode = Mode::Ordered;
  else if (mode_name == "first_match")
    mode = Mode::FirstMatch;
  else
    throw InputError("mock script: unknown mode '" + mode_name + "'");

  MockBackend mock(mode, spec.value("embedding_dim", 1024));

  const std::string fb = spec.value("embedding_fallback", "error");
  if (fb == "hashed")
    mock.set_embedding_fallback(EmbeddingFallback::Hashed);
  else if (fb != "error")
    throw InputError("mock script: unknown embedding_fallback '" + fb + "'");

  if (spec.contains("embeddings")) {
    for (const auto& [text, vec] : spec.at("embeddings").items())
      mock.set_embedding(text, vec.get<Embedding>());
  }

  for (const auto& rule_spec : spec.value("rules", json::array())) {
    MockRule rule;
    if (rule_spec.contains("match")) {
      const auto& m = rule_spec.at("match");
      if (m.contains("role")) rule.match.role = role_from_string(m.at("role").get<std::string>());
      if (m.contains("contains")) rule.match.contains = m.at("contains").get<std::string>();
      if (m.contains("image_contains"))
        rule.match.image_contains = m.at("image_contains").get<std::string>();
    }
    rule.response = response_from_json(rule_spec.at("response"));
    mock.add_rule(std::move(rule));
  }
  return mock;
}

MockBackend MockBackend::from_file(const fs::path& path) {
  json spec = json::parse(read_file(path), nullptr, false);
  if (spec.is_discarded()) throw InputError("mock script is not valid JSON: " + path.string());
  return from_json(spec);
}

void MockBackend::add_rule(MockRule rule) { rules_.push_back(std::move(rule)); }

void MockBackend::add_text_rule(std::optional<ModelRole> role, std::string contains,
                                std::string response_text) {
  MockRule rule;
  rule.match.role = role;
  if (!contains.empty()) rule.match.contains = std::move(contains);
  rule.response.text = std::move(response_text);
  add_rule(std::move(rule));
}

void MockBackend::set_embedding(const std::string& text, Embedding vector) {
  embeddings_[text] = std::move(vector);
}

size_t MockBackend::rules_consumed() const {
  std::lock_guard lock(*mutex_);
  return cursor_;
}

ChatResponse MockBackend::chat_impl(const ChatRequest& request) {
  std::lock_guard lock(*mutex_);
  if (mode_ == Mode::Ordered) {
    if (cursor_ >= rules_.size())
      throw MalformedResponse("mock: unmatched request (script exhausted after " +
                              std::to_string(rules_.size()) + " rules)");
    const MockRule& rule = rules_[cursor_];
    if (!rule.match.matches(request))
      throw MalformedResponse("mock: unmatched request (rule " + std::to_string(cursor_) +
                              " does not match role=" + to_string(request.role) + ")");
    ++cursor_;
    return rule.response;
  }
  for (const MockRule& rule : rules_)
    if (rule.match.matches(request)) return rule.response;
  throw MalformedResponse("mock: unmatched request (no rule matches role=" +
                          to_string(request.role) + ")");
}

Embedding MockBackend::hashed_embedding(const std::string& text, int dim) {
  // splitmix64 stream seeded by the text hash; values in [-1, 1].
  uint64_t state = fnv1a64(text);
  Embedding v(static_cast<size_t>(dim));
  for (auto& x : v) {
    state += 0x9e3779b97f4a7c15ull;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    z ^= z >> 31;
    x = static_cast<float>(static_cast<double>(z >> 11) / static_cast<double>(1ull << 53) * 2.0 -
                           1.0);
  }
  return v;
}

std::vector<Embedding> MockBackend::embed_impl(const std::vector<std::string>& texts) {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    const auto it = embeddings_.find(text);
    if (it != embeddings_.end()) {
      out.push_back(it->second);
    } else if (fallback_ == EmbeddingFallback::Hashed) {
      out.push_back(hashed_embedding(text, embedding_dim_));
    } else {
      throw MalformedResponse("mock: no embedding scripted for text: \"" +
                              (text.size() > 60 ? text.substr(0, 60) + "..." : text) + "\"");
    }
  }
  return out;
}

}  // namespace admir::backend
