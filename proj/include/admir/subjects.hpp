#pragma once

#include "admir/backend.hpp"
#include "admir/database.hpp"

namespace admir::subjects {

/// Query fused with the global summary; resolves referential ambiguity
/// ("what is *he* holding?") before profile matching.
struct SemanticAnchor {
  std::string text;
  std::vector<float> embedding;
};

struct ActiveSubject {
  SubjectProfile profile;
  double relevance = 0.0;  // cosine in [-1, 1]
};

/// Anchor text is the query, then a newline plus a fixed label line carrying
/// the global summary (just the query when the summary is empty).
SemanticAnchor build_anchor(const std::string& query, const std::string& global_summary,
                            backend::Backend& backend);

/// Top-k profiles by cosine against the anchor; ties break on earlier
/// first_seen. An empty registry yields an empty result.
std::vector<ActiveSubject> activate_subjects(const std::vector<SubjectProfile>& registry,
                                             const SemanticAnchor& anchor, int k);

}  // namespace admir::subjects
