#pragma once

#include "admir/backend.hpp"
#include "admir/prompts.hpp"
#include "admir/trace.hpp"

namespace admir::grounding {

/// Ordered references into the trace plus the accumulated observation texts.
struct EvidenceRef {
  int step = 0;
  std::string tool;
  TimeRange range{0, 0};
  std::string excerpt;
};

struct EvidenceChain {
  std::vector<EvidenceRef> refs;
  std::vector<std::string> observations;

  bool empty() const { return observations.empty(); }
  std::string joined() const { return join(observations, "\n"); }
};

/// Evidence from explicitly cited steps, or from every observation-bearing
/// step when the citation list is empty.
EvidenceChain build_evidence_chain(const std::vector<agent::StepRecord>& history,
                                   const std::vector<int>& cited_steps);

/// Visual entity terms harvested from the evidence; lowercase, deduplicated,
/// each tagged with the step it first appeared in.
struct AnchorSet {
  std::vector<std::string> terms;        // insertion order
  std::map<std::string, int> source_step;

  bool empty() const { return terms.empty(); }
  bool any_in(const std::string& text) const;
  std::vector<std::string> matches_in(const std::string& text) const;
};

/// Deterministic extraction: capitalized tokens, quoted strings, and registry
/// subject names appearing in observations. When a backend is supplied, its
/// noun phrases are unioned in on top.
AnchorSet extract_anchors(const EvidenceChain& evidence,
                          const std::vector<std::string>& subject_names,
                          backend::Backend* backend = nullptr,
                          const PromptLibrary* prompts = nullptr);

struct Verdict {
  enum class State { Accept, Reject };
  State state = State::Reject;
  std::string reason;
  std::vector<std::string> matched_anchors;

  bool accepted() const { return state == State::Accept; }
};

/// Accept iff an anchor term occurs in the answer, or the verifier backend
/// affirms the claims against the evidence. Backend failure degrades to the
/// deterministic branch. Rejections carry the reason "Weak Evidence".
Verdict verify_grounding(const std::string& answer, const EvidenceChain& evidence,
                         const AnchorSet& anchors, backend::Backend* backend = nullptr,
                         const PromptLibrary* prompts = nullptr);

/// Rewrites an evidence-poor answer to name a concrete visual anchor. On a
/// backend failure the original answer comes back unchanged; on a rewrite
/// that still lacks anchors, the top anchor is appended.
std::string repair_visual_anchor(const std::string& answer, const AnchorSet& anchors,
                                 backend::Backend& backend, const PromptLibrary& prompts);

const std::vector<std::string>& default_visual_patterns();

/// True when the question's phrasing demands visual grounding.
bool question_demands_visual(const std::string& question,
                             const std::vector<std::string>& patterns = default_visual_patterns());

/// Compresses the answer to the word limit: refiner pass, deterministic
/// meta-phrase strip, one re-prompt on violation, then hard truncation.
std::string refine_answer(const std::string& answer, backend::Backend& backend,
                          const PromptLibrary& prompts, int word_limit = 25);

/// Case-insensitive removal of benchmark meta phrases ("the video shows",
/// "the answer is", ...) with whitespace/punctuation tidy-up.
std::string strip_meta_phrases(const std::string& text);
const std::vector<std::string>& meta_phrases();

}  // namespace admir::grounding
