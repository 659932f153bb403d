#pragma once

#include "admir/backend.hpp"
#include "admir/database.hpp"
#include "admir/prompts.hpp"

namespace admir::retrieval {

class EmptyDatabase : public Error {
 public:
  using Error::Error;
};

class MissingEmbedding : public Error {
 public:
  using Error::Error;
};

/// Query against the hybrid index: dense embedding plus rewritten keywords.
struct HybridQuery {
  std::string raw;
  std::vector<float> embedding;
  std::vector<std::string> keywords;  // <= 3, lowercase, nonempty
  double beta = 1.0;                  // relative lexical weight
  double exact_bonus = 1.0;
};

struct ScoredClip {
  int clip_index = 0;
  double semantic = 0.0;  // cosine in [-1, 1]
  double lexical = 0.0;   // >= 0
  double total = 0.0;     // semantic + beta * lexical
};

/// Retrieved clips coalesced into one continuous event.
struct EventBlock {
  double start = 0.0;
  double end = 0.0;
  std::vector<int> members;  // clip indices, sorted by time
  double score = 0.0;        // max of member totals
};

/// Keyword hit fraction plus a verbatim-query bonus, over the clip's
/// lowercased lexical document (caption + transcript + OCR lines).
double lexical_score(const HybridQuery& query, const ClipRecord& clip);

ScoredClip hybrid_score(const HybridQuery& query, const ClipRecord& clip);

/// Descending total score; ties break on earlier start time, then lower
/// clip index. top_k > clip count is clamped.
std::vector<ScoredClip> search_clips(const VideoDatabase& db, const HybridQuery& query,
                                     int top_k);

/// Rewrites a query into <= 3 lowercase keyword phrases. Falls back to
/// stop-word-filtered tokens of the raw query when the backend fails or
/// returns nothing usable.
std::vector<std::string> rewrite_query(const std::string& query, backend::Backend& backend,
                                       const PromptLibrary& prompts);

/// Fallback keyword tokenization (also used when no backend is involved).
std::vector<std::string> fallback_keywords(const std::string& query, size_t max_keywords = 3);

/// Builds a query: embeds the raw text and normalizes provided keywords.
HybridQuery make_query(const std::string& raw, std::vector<std::string> keywords,
                       backend::Backend& backend, double beta);

/// Greedy chronological coalescing: adjacent candidates merge when the gap is
/// under gap_max OR their caption embeddings' cosine exceeds affinity_min.
/// Blocks come back sorted by score descending (ties: earlier start).
std::vector<EventBlock> temporal_fusion(const std::vector<ScoredClip>& ranked,
                                        const VideoDatabase& db, double gap_max = 3.0,
                                        double affinity_min = 0.8);

}  // namespace admir::retrieval
