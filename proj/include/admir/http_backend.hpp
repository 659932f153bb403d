#pragma once

#include "admir/backend.hpp"

namespace admir::backend {

/// Connection settings for an OpenAI-compatible chat-completions service.
/// Credentials come from the environment; everything else can be overridden
/// in a JSON profile file.
struct HttpBackendConfig {
  std::string base_url = "https://api.openai.com";  // ADMIR_BASE_URL
  std::string api_key;                              // ADMIR_API_KEY
  std::string chat_path = "/v1/chat/completions";
  std::string embeddings_path = "/v1/embeddings";
  std::map<ModelRole, std::string> models;  // per-role model names
  std::string embedding_model = "bge-m3";
  int embedding_dim = 1024;
  int timeout_secs = 120;
  RetryPolicy retry;

  /// ADMIR_BASE_URL, ADMIR_API_KEY, ADMIR_MODEL_<ROLE>, ADMIR_EMBED_MODEL,
  /// ADMIR_EMBED_DIM on top of the built-in defaults.
  static HttpBackendConfig from_env();
  static HttpBackendConfig from_file(const fs::path& path);

  const std::string& model_for(ModelRole role) const;
};

/// Chat-completions adapter. Images are attached as base64 data URLs; native
/// tool_calls payloads are folded into the normalized ToolCallPayload shape.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpBackendConfig config);

  int embedding_dim() const override { return config_.embedding_dim; }
  const HttpBackendConfig& config() const { return config_; }

 protected:
  ChatResponse chat_impl(const ChatRequest& request) override;
  std::vector<Embedding> embed_impl(const std::vector<std::string>& texts) override;

 private:
  nlohmann::json post_json(const std::string& path, const nlohmann::json& body);

  HttpBackendConfig config_;
};

}  // namespace admir::backend
