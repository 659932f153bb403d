#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "admir/common.hpp"
#include "admir/retry.hpp"

#include <nlohmann/json.hpp>

namespace admir::backend {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class BackendError : public Error {
 public:
  BackendError(const std::string& msg, bool retryable) : Error(msg), retryable_(retryable) {}
  bool retryable() const { return retryable_; }

 private:
  bool retryable_;
};

/// Bad credentials; never retried.
class AuthError : public BackendError {
 public:
  explicit AuthError(const std::string& msg) : BackendError(msg, false) {}
};

/// Timeouts, rate limits, 5xx-class failures; retried per policy.
class TransportError : public BackendError {
 public:
  explicit TransportError(const std::string& msg) : BackendError(msg, true) {}
};

/// Unparseable or out-of-contract payload; never retried.
class MalformedResponse : public BackendError {
 public:
  explicit MalformedResponse(const std::string& msg) : BackendError(msg, false) {}
};

/// Embedding backend returned vectors of the wrong width.
class DimensionMismatch : public BackendError {
 public:
  explicit DimensionMismatch(const std::string& msg) : BackendError(msg, false) {}
};

// ---------------------------------------------------------------------------
// Requests / responses
// ---------------------------------------------------------------------------

/// Which configured model serves the request. Model names per role are
/// deployment configuration, not code.
enum class ModelRole { Controller, Captioner, Expert, Refiner, Judge };

std::string to_string(ModelRole role);
ModelRole role_from_string(const std::string& name);

struct ImageRef {
  std::string path;
  std::string detail = "auto";  // "auto" | "low" | "high"
};

struct ChatMessage {
  enum class Kind { System, User };
  Kind role = Kind::User;
  std::string content;
};

struct ChatRequest {
  ModelRole role = ModelRole::Controller;
  std::vector<ChatMessage> messages;
  std::vector<ImageRef> images;
  double temperature = 0.0;
  int max_tokens = 4096;

  /// Throws std::invalid_argument unless at least one user message is present.
  void validate() const;

  /// All message contents joined; what mock matchers run against.
  std::string combined_content() const;

  static ChatRequest simple(ModelRole role, std::string system, std::string user);
};

struct ToolCallPayload {
  std::string name;
  nlohmann::json arguments;  // object
};

struct ChatResponse {
  std::string text;
  std::string finish_reason = "stop";
  std::optional<ToolCallPayload> tool_call;
};

/// Tool calls may arrive natively structured or embedded in text as a JSON
/// object {"tool": ..., "arguments": {...}} (optionally fenced). This folds
/// the text form into `tool_call` so callers see a single shape.
void normalize_tool_call(ChatResponse& response);

using Embedding = std::vector<float>;

// ---------------------------------------------------------------------------
// Backend interface
// ---------------------------------------------------------------------------

/// All model inference (text chat, vision chat, embeddings) goes through this
/// interface. Retries and embedding normalization happen here so concrete
/// adapters stay thin. Handles are shareable across concurrent sessions.
class Backend {
 public:
  explicit Backend(RetryPolicy retry = {}, SleepFn sleep = default_sleep)
      : retry_(retry), sleep_(std::move(sleep)) {}
  virtual ~Backend() = default;

  /// Validates, retries transient failures per policy, normalizes tool calls.
  ChatResponse chat(const ChatRequest& request);

  /// One vector per input text, all of embedding_dim() width, L2-normalized
  /// here so cosine reduces to a dot product everywhere downstream.
  std::vector<Embedding> embed(const std::vector<std::string>& texts);

  virtual int embedding_dim() const = 0;

  const RetryPolicy& retry_policy() const { return retry_; }

 protected:
  virtual ChatResponse chat_impl(const ChatRequest& request) = 0;
  virtual std::vector<Embedding> embed_impl(const std::vector<std::string>& texts) = 0;

 private:
  RetryPolicy retry_;
  SleepFn sleep_;
};

/// Decorator counting chat/embed calls; used for trace footers.
class CountingBackend : public Backend {
 public:
  explicit CountingBackend(Backend& inner)
      : Backend(RetryPolicy{.max_retries = 0}), inner_(inner) {}

  size_t chat_calls() const { return chat_calls_; }
  size_t embed_calls() const { return embed_calls_; }
  int embedding_dim() const override { return inner_.embedding_dim(); }

 protected:
  // Retries already happen inside the wrapped backend.
  ChatResponse chat_impl(const ChatRequest& request) override {
    ++chat_calls_;
    return inner_.chat(request);
  }
  std::vector<Embedding> embed_impl(const std::vector<std::string>& texts) override {
    ++embed_calls_;
    return inner_.embed(texts);
  }

 private:
  Backend& inner_;
  size_t chat_calls_ = 0;
  size_t embed_calls_ = 0;
};

}  // namespace admir::backend
