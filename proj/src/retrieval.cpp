#include "admir/retrieval.hpp"

#include <cmath>
#include <set>

namespace admir::retrieval {

using backend::Backend;
using backend::ChatRequest;
using backend::ModelRole;

double lexical_score(const HybridQuery& query, const ClipRecord& clip) {
  const std::string doc = clip.lexical_document();

  double hits = 0.0;
  for (const auto& phrase : query.keywords)
    if (doc.find(phrase) != std::string::npos) hits += 1.0;
  const double hit_fraction =
      query.keywords.empty() ? 0.0 : hits / static_cast<double>(query.keywords.size());

  const std::string raw = to_lower(trim(query.raw));
  const bool exact = !raw.empty() && doc.find(raw) != std::string::npos;
  return hit_fraction + (exact ? query.exact_bonus : 0.0);
}

ScoredClip hybrid_score(const HybridQuery& query, const ClipRecord& clip) {
  if (query.embedding.empty()) throw MissingEmbedding("query embedding not computed");
  if (clip.embedding.empty())
    throw MissingEmbedding("clip " + std::to_string(clip.index) + " has no embedding");

  ScoredClip scored;
  scored.clip_index = clip.index;
  scored.semantic = cosine(query.embedding, clip.embedding);
  scored.lexical = lexical_score(query, clip);
  scored.total = scored.semantic + query.beta * scored.lexical;
  return scored;
}

std::vector<ScoredClip> search_clips(const VideoDatabase& db, const HybridQuery& query,
                                     int top_k) {
  if (db.clips.empty()) throw EmptyDatabase("database has no clips");
  if (top_k < 1) throw std::invalid_argument("top_k must be >= 1");
  top_k = std::min<int>(top_k, static_cast<int>(db.clips.size()));

  std::vector<ScoredClip> scored;
  scored.reserve(db.clips.size());
  for (const auto& clip : db.clips) scored.push_back(hybrid_score(query, clip));

  std::vector<size_t> order(scored.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (scored[a].total != scored[b].total) return scored[a].total > scored[b].total;
    if (db.clips[a].start != db.clips[b].start) return db.clips[a].start < db.clips[b].start;
    return scored[a].clip_index < scored[b].clip_index;
  });

  std::vector<ScoredClip> out;
  out.reserve(static_cast<size_t>(top_k));
  for (int i = 0; i < top_k; ++i) out.push_back(scored[order[static_cast<size_t>(i)]]);
  return out;
}

namespace {

const std::set<std::string>& stop_words() {
  static const std::set<std::string> words = {
      "a",  "an", "and", "are", "at",   "be",  "by",  "do",   "does", "for", "from",
      "he", "in", "is",  "it",  "its",  "of",  "on",  "or",   "she",  "so",  "that",
      "the", "their", "they", "this", "to", "was", "what", "when", "where", "which",
      "who", "why", "with", "how"};
  return words;
}

}  // namespace

std::vector<std::string> fallback_keywords(const std::string& query, size_t max_keywords) {
  std::vector<std::string> keywords;
  for (const auto& token : split_whitespace(to_lower(query))) {
    std::string word;
    for (char c : token)
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '%' || c == '\'') word.push_back(c);
    if (word.empty() || stop_words().count(word)) continue;
    if (std::find(keywords.begin(), keywords.end(), word) == keywords.end())
      keywords.push_back(word);
    if (keywords.size() == max_keywords) break;
  }
  return keywords;
}

std::vector<std::string> rewrite_query(const std::string& query, Backend& backend,
                                       const PromptLibrary& prompts) {
  if (trim(query).empty()) throw std::invalid_argument("query must be nonempty");
  try {
    const auto request = ChatRequest::simple(
        ModelRole::Controller, "", prompts.render("query_rewrite", {{"original_query", query}}));
    const auto response = backend.chat(request);

    std::vector<std::string> keywords;
    for (const auto& part : split(response.text, ',')) {
      const std::string phrase = to_lower(trim(part));
      if (phrase.empty()) continue;
      keywords.push_back(phrase);
      if (keywords.size() == 3) break;
    }
    if (!keywords.empty()) return keywords;
  } catch (const backend::BackendError&) {
    // fall through to tokenization
  }
  return fallback_keywords(query);
}

HybridQuery make_query(const std::string& raw, std::vector<std::string> keywords,
                       Backend& backend, double beta) {
  HybridQuery query;
  query.raw = raw;
  query.beta = beta;
  for (auto& k : keywords) {
    k = to_lower(trim(k));
    if (!k.empty()) query.keywords.push_back(k);
  }
  query.embedding = backend.embed({raw}).front();
  return query;
}

std::vector<EventBlock> temporal_fusion(const std::vector<ScoredClip>& ranked,
                                        const VideoDatabase& db, double gap_max,
                                        double affinity_min) {
  if (ranked.empty()) return {};

  auto clip_of = [&](int index) -> const ClipRecord& {
    for (const auto& clip : db.clips)
      if (clip.index == index) return clip;
    throw Error("temporal_fusion: unknown clip index " + std::to_string(index));
  };

  // Chronological candidate order (dedup defensively against repeated hits).
  std::vector<ScoredClip> candidates = ranked;
  std::sort(candidates.begin(), candidates.end(), [&](const ScoredClip& a, const ScoredClip& b) {
    const auto& ca = clip_of(a.clip_index);
    const auto& cb = clip_of(b.clip_index);
    if (ca.start != cb.start) return ca.start < cb.start;
    return a.clip_index < b.clip_index;
  });
  candidates.erase(std::unique(candidates.begin(), candidates.end(),
                               [](const ScoredClip& a, const ScoredClip& b) {
                                 return a.clip_index == b.clip_index;
                               }),
                   candidates.end());

  std::vector<EventBlock> blocks;
  for (const auto& candidate : candidates) {
    const ClipRecord& clip = clip_of(candidate.clip_index);
    bool merged = false;
    if (!blocks.empty()) {
      EventBlock& last = blocks.back();
      const ClipRecord& prev = clip_of(last.members.back());
      const double gap = clip.start - prev.end;
      const bool close_in_time = gap < gap_max;
      const bool affine = !prev.embedding.empty() && !clip.embedding.empty() &&
                          cosine(prev.embedding, clip.embedding) > affinity_min;
      if (close_in_time || affine) {
        last.members.push_back(clip.index);
        last.start = std::min(last.start, clip.start);
        last.end = std::max(last.end, clip.end);
        last.score = std::max(last.score, candidate.total);
        merged = true;
      }
    }
    if (!merged) {
      EventBlock block;
      block.start = clip.start;
      block.end = clip.end;
      block.members = {clip.index};
      block.score = candidate.total;
      blocks.push_back(std::move(block));
    }
  }

  std::sort(blocks.begin(), blocks.end(), [](const EventBlock& a, const EventBlock& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.start < b.start;
  });
  return blocks;
}

}  // namespace admir::retrieval
