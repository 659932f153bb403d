#include "admir/grounding.hpp"

#include <cctype>
#include <set>

namespace admir::grounding {

using backend::Backend;
using backend::ChatRequest;
using backend::ModelRole;

EvidenceChain build_evidence_chain(const std::vector<agent::StepRecord>& history,
                                   const std::vector<int>& cited_steps) {
  EvidenceChain chain;
  auto add_step = [&](const agent::StepRecord& record) {
    if (record.observation.text.empty()) return;
    EvidenceRef ref;
    ref.step = record.step;
    ref.tool = agent::tool_name(record.action);
    ref.range.start = record.observation.payload.value("start", 0.0);
    ref.range.end = record.observation.payload.value("end", 0.0);
    ref.excerpt = record.observation.text.substr(0, 160);
    chain.refs.push_back(std::move(ref));
    chain.observations.push_back(record.observation.text);
  };

  if (cited_steps.empty()) {
    for (const auto& record : history) add_step(record);
    return chain;
  }
  for (int cited : cited_steps) {
    for (const auto& record : history) {
      if (record.step == cited) {
        add_step(record);
        break;
      }
    }
  }
  // Citations that resolve to nothing fall back to the full history.
  if (chain.empty())
    for (const auto& record : history) add_step(record);
  return chain;
}

bool AnchorSet::any_in(const std::string& text) const {
  const std::string lower = to_lower(text);
  return std::any_of(terms.begin(), terms.end(), [&](const std::string& term) {
    return lower.find(term) != std::string::npos;
  });
}

std::vector<std::string> AnchorSet::matches_in(const std::string& text) const {
  const std::string lower = to_lower(text);
  std::vector<std::string> matched;
  for (const auto& term : terms)
    if (lower.find(term) != std::string::npos) matched.push_back(term);
  return matched;
}

namespace {

const std::set<std::string>& anchor_stop_words() {
  static const std::set<std::string> words = {
      "the", "a", "an", "this", "that", "these", "those", "it", "he", "she", "they",
      "i", "we", "you", "and", "or", "but", "if", "then", "step", "event", "block",
      "clip", "found", "answer", "question", "summary", "mode", "audio", "genre",
      "narrative", "persuasion", "strategy", "symbols", "key", "on-screen", "initial",
      "reject", "weak", "evidence", "accepted", "forced", "redirection", "thought",
      "action", "observation", "final", "no-op", "tool", "error", "expert"};
  return words;
}

void add_anchor(AnchorSet& anchors, const std::string& raw, int step) {
  std::string term = to_lower(trim(raw));
  while (!term.empty() && std::ispunct(static_cast<unsigned char>(term.back()))) term.pop_back();
  while (!term.empty() && std::ispunct(static_cast<unsigned char>(term.front())))
    term.erase(term.begin());
  if (term.size() < 2) return;
  if (anchor_stop_words().count(term)) return;
  if (anchors.source_step.count(term)) return;
  anchors.terms.push_back(term);
  anchors.source_step[term] = step;
}

// Capitalized tokens (Title or ALLCAPS) and "quoted strings".
void extract_from_text(AnchorSet& anchors, const std::string& text, int step) {
  // Quoted strings first so multiword phrases stay intact.
  size_t pos = 0;
  while ((pos = text.find('"', pos)) != std::string::npos) {
    const size_t close = text.find('"', pos + 1);
    if (close == std::string::npos) break;
    const std::string quoted = text.substr(pos + 1, close - pos - 1);
    if (!quoted.empty() && quoted.size() <= 60) add_anchor(anchors, quoted, step);
    pos = close + 1;
  }

  bool sentence_start = true;
  for (const auto& token : split_whitespace(text)) {
    std::string word;
    for (char c : token)
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '\'' || c == '-' || c == '%')
        word.push_back(c);
    // ':' is not sentence-ending: entity lists ("entities: Ferrari") follow it
    const bool ends_sentence = !token.empty() && (token.back() == '.' || token.back() == '!' ||
                                                  token.back() == '?');
    if (word.size() >= 2) {
      const bool capitalized = std::isupper(static_cast<unsigned char>(word.front()));
      const bool allcaps = std::all_of(word.begin(), word.end(), [](unsigned char c) {
        return !std::isalpha(c) || std::isupper(c);
      });
      // Sentence-initial Title-case words are usually not entities; ALLCAPS
      // (OCR-style) always counts.
      if (allcaps && std::any_of(word.begin(), word.end(),
                                 [](unsigned char c) { return std::isalpha(c); })) {
        add_anchor(anchors, word, step);
      } else if (capitalized && !sentence_start) {
        add_anchor(anchors, word, step);
      }
    }
    sentence_start = ends_sentence;
  }
}

}  // namespace

AnchorSet extract_anchors(const EvidenceChain& evidence,
                          const std::vector<std::string>& subject_names, Backend* backend,
                          const PromptLibrary* prompts) {
  AnchorSet anchors;
  for (size_t i = 0; i < evidence.observations.size(); ++i) {
    const int step = i < evidence.refs.size() ? evidence.refs[i].step : 0;
    const std::string& obs = evidence.observations[i];
    extract_from_text(anchors, obs, step);
    for (const auto& name : subject_names)
      if (contains_ci(obs, name)) add_anchor(anchors, name, step);
  }

  if (backend && prompts && !evidence.empty()) {
    try {
      const auto request = ChatRequest::simple(
          ModelRole::Refiner, "",
          prompts->render("anchor_extract", {{"evidence", evidence.joined()}}));
      const auto response = backend->chat(request);
      for (const auto& part : split(response.text, ','))
        add_anchor(anchors, part, 0);
    } catch (const backend::BackendError&) {
      // deterministic extraction already succeeded; LLM pass is best-effort
    }
  }
  return anchors;
}

Verdict verify_grounding(const std::string& answer, const EvidenceChain& evidence,
                         const AnchorSet& anchors, Backend* backend,
                         const PromptLibrary* prompts) {
  if (trim(answer).empty()) throw std::invalid_argument("cannot verify an empty answer");

  Verdict verdict;
  verdict.matched_anchors = anchors.matches_in(answer);
  if (!verdict.matched_anchors.empty()) {
    verdict.state = Verdict::State::Accept;
    verdict.reason = "anchored by: " + join(verdict.matched_anchors, ", ");
    return verdict;
  }

  if (backend && prompts && !evidence.empty()) {
    try {
      const auto request = ChatRequest::simple(
          ModelRole::Refiner, "",
          prompts->render("verify_claims",
                          {{"answer", answer}, {"evidence", evidence.joined()}}));
      const auto response = backend->chat(request);
      const std::string reply = to_lower(response.text);
      if (reply.find("supported") != std::string::npos &&
          reply.find("unsupported") == std::string::npos) {
        verdict.state = Verdict::State::Accept;
        verdict.reason = "verifier affirmed the claims against the evidence";
        return verdict;
      }
    } catch (const backend::BackendError&) {
      // degrade to the deterministic branch (which already said no)
    }
  }

  verdict.state = Verdict::State::Reject;
  verdict.reason = "Weak Evidence";
  return verdict;
}

std::string repair_visual_anchor(const std::string& answer, const AnchorSet& anchors,
                                 Backend& backend, const PromptLibrary& prompts) {
  if (anchors.empty()) return answer;
  try {
    const auto request = ChatRequest::simple(
        ModelRole::Refiner, "",
        prompts.render("anchor_repair",
                       {{"answer", answer}, {"anchors", join(anchors.terms, ", ")}}));
    const auto response = backend.chat(request);
    std::string repaired = trim(response.text);
    if (repaired.empty()) return answer;
    if (!anchors.any_in(repaired)) repaired += " (" + anchors.terms.front() + ")";
    return repaired;
  } catch (const backend::BackendError&) {
    return answer;  // logged by the caller; original answer stands
  }
}

const std::vector<std::string>& default_visual_patterns() {
  static const std::vector<std::string> patterns = {
      "what specific", "which object", "what is shown", "what object", "what item",
      "what is visible"};
  return patterns;
}

bool question_demands_visual(const std::string& question,
                             const std::vector<std::string>& patterns) {
  const std::string q = to_lower(question);
  return std::any_of(patterns.begin(), patterns.end(), [&](const std::string& p) {
    return q.find(to_lower(p)) != std::string::npos;
  });
}

const std::vector<std::string>& meta_phrases() {
  static const std::vector<std::string> phrases = {
      "the video shows", "the answer is", "the video depicts", "in the video,", "in the video"};
  return phrases;
}

std::string strip_meta_phrases(const std::string& text) {
  std::string out = text;
  for (const auto& phrase : meta_phrases()) {
    const std::string lower_phrase = to_lower(phrase);
    while (true) {
      const std::string lower_out = to_lower(out);
      const size_t pos = lower_out.find(lower_phrase);
      if (pos == std::string::npos) break;
      out.erase(pos, phrase.size());
    }
  }
  // Tidy leftovers: leading separators and doubled spaces.
  std::string tidy = trim(out);
  while (!tidy.empty() && (tidy.front() == ',' || tidy.front() == ':' || tidy.front() == ';'))
    tidy = trim(tidy.substr(1));
  std::string collapsed;
  bool prev_space = false;
  for (char c : tidy) {
    const bool space = std::isspace(static_cast<unsigned char>(c));
    if (space && prev_space) continue;
    collapsed.push_back(space ? ' ' : c);
    prev_space = space;
  }
  return collapsed;
}

std::string refine_answer(const std::string& answer, Backend& backend,
                          const PromptLibrary& prompts, int word_limit) {
  if (trim(answer).empty()) throw std::invalid_argument("cannot refine an empty answer");

  auto ask = [&](const std::string& extra) {
    auto request = ChatRequest::simple(
        ModelRole::Refiner, "",
        prompts.render("refine", {{"answer", answer}, {"limit", std::to_string(word_limit)}}));
    if (!extra.empty())
      request.messages.push_back({backend::ChatMessage::Kind::User, extra});
    return trim(backend.chat(request).text);
  };

  std::string candidate;
  try {
    candidate = ask("");
  } catch (const backend::BackendError&) {
    candidate = answer;  // refiner down; deterministic fallback path below
  }
  if (candidate.empty()) candidate = answer;
  candidate = strip_meta_phrases(candidate);
  if (count_words(candidate) <= word_limit) return candidate;

  try {
    std::string retry = ask("Still too long. Rewrite in at most " + std::to_string(word_limit) +
                            " words, plain text only.");
    retry = strip_meta_phrases(retry);
    if (!retry.empty() && count_words(retry) <= word_limit) return retry;
    if (!retry.empty()) candidate = retry;
  } catch (const backend::BackendError&) {
    // fall through to truncation
  }
  return truncate_words(candidate, word_limit);
}

}  // namespace admir::grounding
