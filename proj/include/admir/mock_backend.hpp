#pragma once

#include <map>
#include <memory>
#include <mutex>

#include "admir/backend.hpp"

namespace admir::backend {

/// Matches a chat request by role, message content, and/or attached image
/// paths. All present fields must match; an empty matcher matches everything.
struct MockMatcher {
  std::optional<ModelRole> role;
  std::optional<std::string> contains;        // substring of the joined message contents
  std::optional<std::string> image_contains;  // substring of any attached image path

  bool matches(const ChatRequest& request) const;
};

struct MockRule {
  MockMatcher match;
  ChatResponse response;
};

/// Deterministic scriptable backend. Two replay modes:
///   - Ordered: each chat() consumes the next rule, whose matcher must match
///     (single-consumer; replaying a whole session verbatim).
///   - FirstMatch: first matching rule wins; rules are never consumed
///     (safe for concurrent use).
/// An unmatched request is always an error, never a silent default.
///
/// Embeddings come from an exact-text table; optionally a deterministic
/// hash-seeded fallback can be enabled for texts missing from the table.
class MockBackend : public Backend {
 public:
  enum class Mode { Ordered, FirstMatch };
  enum class EmbeddingFallback { Error, Hashed };

  explicit MockBackend(Mode mode = Mode::FirstMatch, int embedding_dim = 1024);

  /// Loads the documented JSON script format (see README: "Mock scripts").
  static MockBackend from_file(const fs::path& path);
  static MockBackend from_json(const nlohmann::json& spec);

  void add_rule(MockRule rule);
  void add_text_rule(std::optional<ModelRole> role, std::string contains, std::string response_text);
  void set_embedding(const std::string& text, Embedding vector);
  void set_embedding_fallback(EmbeddingFallback fb) { fallback_ = fb; }

  size_t rules_consumed() const;
  int embedding_dim() const override { return embedding_dim_; }

  /// Deterministic pseudo-random unit-seed vector for the hashed fallback.
  static Embedding hashed_embedding(const std::string& text, int dim);

 protected:
  ChatResponse chat_impl(const ChatRequest& request) override;
  std::vector<Embedding> embed_impl(const std::vector<std::string>& texts) override;

 private:
  Mode mode_;
  int embedding_dim_;
  EmbeddingFallback fallback_ = EmbeddingFallback::Error;
  std::vector<MockRule> rules_;
  std::map<std::string, Embedding> embeddings_;
  size_t cursor_ = 0;
  // unique_ptr keeps the backend movable (from_file returns by value)
  mutable std::unique_ptr<std::mutex> mutex_ = std::make_unique<std::mutex>();
};

}  // namespace admir::backend
