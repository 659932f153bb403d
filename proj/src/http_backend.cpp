#include "admir/http_backend.hpp"

#include <cstdlib>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace admir::backend {

using nlohmann::json;

namespace {

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

std::string mime_for(const std::string& path) {
  const std::string ext = to_lower(fs::path(path).extension().string());
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".png") return "image/png";
  if (ext == ".ppm") return "image/x-portable-pixmap";
  return "application/octet-stream";
}

const std::map<ModelRole, std::string> kDefaultModels = {
    {ModelRole::Controller, "gpt-4o"}, {ModelRole::Captioner, "gpt-4o"},
    {ModelRole::Expert, "o1"},         {ModelRole::Refiner, "gpt-4o-mini"},
    {ModelRole::Judge, "gpt-4o"},
};

}  // namespace

HttpBackendConfig HttpBackendConfig::from_env() {
  HttpBackendConfig cfg;
  cfg.models = kDefaultModels;
  cfg.base_url = env_or("ADMIR_BASE_URL", cfg.base_url);
  cfg.api_key = env_or("ADMIR_API_KEY", "");
  cfg.embedding_model = env_or("ADMIR_EMBED_MODEL", cfg.embedding_model);
  cfg.embedding_dim = std::stoi(env_or("ADMIR_EMBED_DIM", std::to_string(cfg.embedding_dim)));
  for (auto role : {ModelRole::Controller, ModelRole::Captioner, ModelRole::Expert,
                    ModelRole::Refiner, ModelRole::Judge}) {
    std::string var = "ADMIR_MODEL_" + to_lower(to_string(role));
    std::transform(var.begin(), var.end(), var.begin(), ::toupper);
    cfg.models[role] = env_or(var.c_str(), cfg.models[role]);
  }
  return cfg;
}

HttpBackendConfig HttpBackendConfig::from_file(const fs::path& path) {
  json spec = json::parse(read_file(path), nullptr, false);
  if (spec.is_discarded()) throw InputError("backend profile is not valid JSON: " + path.string());
  HttpBackendConfig cfg = from_env();
  cfg.base_url = spec.value("base_url", cfg.base_url);
  cfg.chat_path = spec.value("chat_path", cfg.chat_path);
  cfg.embeddings_path = spec.value("embeddings_path", cfg.embeddings_path);
  cfg.embedding_model = spec.value("embedding_model", cfg.embedding_model);
  cfg.embedding_dim = spec.value("embedding_dim", cfg.embedding_dim);
  cfg.timeout_secs = spec.value("timeout_secs", cfg.timeout_secs);
  if (spec.contains("models"))
    for (const auto& [role, model] : spec.at("models").items())
      cfg.models[role_from_string(role)] = model.get<std::string>();
  if (spec.contains("retry")) {
    const auto& r = spec.at("retry");
    cfg.retry.max_retries = r.value("max_retries", cfg.retry.max_retries);
    cfg.retry.base_delay = std::chrono::milliseconds(
        r.value("base_delay_ms", static_cast<int>(cfg.retry.base_delay.count())));
    cfg.retry.growth = r.value("growth", cfg.retry.growth);
  }
  return cfg;
}

const std::string& HttpBackendConfig::model_for(ModelRole role) const {
  const auto it = models.find(role);
  if (it != models.end()) return it->second;
  const auto fallback = kDefaultModels.find(role);
  return fallback->second;
}

HttpBackend::HttpBackend(HttpBackendConfig config)
    : Backend(config.retry), config_(std::move(config)) {}

json HttpBackend::post_json(const std::string& path, const json& body) {
  httplib::Client client(config_.base_url);
  client.set_connection_timeout(config_.timeout_secs);
  client.set_read_timeout(config_.timeout_secs);
  httplib::Headers headers;
  if (!config_.api_key.empty())
    headers.emplace("Authorization", "Bearer " + config_.api_key);

  const auto result = client.Post(path, headers, body.dump(), "application/json");
  if (!result)
    throw TransportError("http: " + httplib::to_string(result.error()) + " (" +
                         config_.base_url + path + ")");

  const int status = result->status;
  if (status == 401 || status == 403)
    throw AuthError("http: authentication failed (status " + std::to_string(status) + ")");
  if (status == 408 || status == 429 || status >= 500)
    throw TransportError("http: transient failure (status " + std::to_string(status) + ")");
  if (status != 200)
    throw MalformedResponse("http: unexpected status " + std::to_string(status) + ": " +
                            result->body.substr(0, 200));

  json parsed = json::parse(result->body, nullptr, false);
  if (parsed.is_discarded())
    throw MalformedResponse("http: response body is not valid JSON");
  return parsed;
}

ChatResponse HttpBackend::chat_impl(const ChatRequest& request) {
  json messages = json::array();
  for (size_t i = 0; i < request.messages.size(); ++i) {
    const auto& m = request.messages[i];
    json msg;
    msg["role"] = m.role == ChatMessage::Kind::System ? "system" : "user";
    // Images ride on the last user message as data-URL content parts.
    const bool attach_here = !request.images.empty() && i + 1 == request.messages.size() &&
                             m.role == ChatMessage::Kind::User;
    if (attach_here) {
      json parts = json::array();
      parts.push_back({{"type", "text"}, {"text", m.content}});
      for (const auto& image : request.images) {
        const std::string bytes = read_file(image.path);
        json part;
        part["type"] = "image_url";
        part["image_url"]["url"] =
            "data:" + mime_for(image.path) + ";base64," + base64_encode(bytes.data(), bytes.size());
        part["image_url"]["detail"] = image.detail;
        parts.push_back(std::move(part));
      }
      msg["content"] = std::move(parts);
    } else {
      msg["content"] = m.content;
    }
    messages.push_back(std::move(msg));
  }

  json body;
  body["model"] = config_.model_for(request.role);
  body["messages"] = std::move(messages);
  body["temperature"] = request.temperature;
  body["max_tokens"] = request.max_tokens;

  const json reply = post_json(config_.chat_path, body);
  if (!reply.contains("choices") || reply["choices"].empty())
    throw MalformedResponse("http: chat response has no choices");
  const json& choice = reply["choices"][0];
  const json& message = choice.value("message", json::object());

  ChatResponse response;
  response.finish_reason = choice.value("finish_reason", "stop");
  if (message.contains("content") && message["content"].is_string())
    response.text = message["content"].get<std::string>();
  if (message.contains("tool_calls") && message["tool_calls"].is_array() &&
      !message["tool_calls"].empty()) {
    const json& tc = message["tool_calls"][0];
    ToolCallPayload call;
    call.name = tc.value("function", json::object()).value("name", "");
    const std::string args = tc.value("function", json::object()).value("arguments", "{}");
    call.arguments = json::parse(args, nullptr, false);
    if (call.arguments.is_discarded())
      throw MalformedResponse("http: tool call arguments are not valid JSON");
    if (call.name.empty()) throw MalformedResponse("http: tool call without a name");
    response.tool_call = std::move(call);
  }
  return response;
}

std::vector<Embedding> HttpBackend::embed_impl(const std::vector<std::string>& texts) {
  json body;
  body["model"] = config_.embedding_model;
  body["input"] = texts;
  const json reply = post_json(config_.embeddings_path, body);
  if (!reply.contains("data") || !reply["data"].is_array())
    throw MalformedResponse("http: embeddings response has no data array");
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& item : reply["data"])
    out.push_back(item.value("embedding", Embedding{}));
  return out;
}

}  // namespace admir::backend
