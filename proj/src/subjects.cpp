#include "admir/subjects.hpp"

namespace admir::subjects {

SemanticAnchor build_anchor(const std::string& query, const std::string& global_summary,
                            backend::Backend& backend) {
  if (trim(query).empty()) throw std::invalid_argument("anchor query must be nonempty");

  SemanticAnchor anchor;
  anchor.text = trim(query);
  if (!trim(global_summary).empty())
    anchor.text += "\n[GLOBAL CONTEXT] " + trim(global_summary);
  anchor.embedding = backend.embed({anchor.text}).front();
  return anchor;
}

std::vector<ActiveSubject> activate_subjects(const std::vector<SubjectProfile>& registry,
                                             const SemanticAnchor& anchor, int k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (registry.empty()) return {};

  std::vector<ActiveSubject> scored;
  scored.reserve(registry.size());
  for (const auto& profile : registry) {
    if (profile.embedding.empty())
      throw Error("subject '" + profile.name + "' has no profile embedding");
    scored.push_back({profile, cosine(profile.embedding, anchor.embedding)});
  }

  std::sort(scored.begin(), scored.end(), [](const ActiveSubject& a, const ActiveSubject& b) {
    if (a.relevance != b.relevance) return a.relevance > b.relevance;
    return a.profile.first_seen < b.profile.first_seen;
  });
  if (scored.size() > static_cast<size_t>(k)) scored.resize(static_cast<size_t>(k));
  return scored;
}

}  // namespace admir::subjects
