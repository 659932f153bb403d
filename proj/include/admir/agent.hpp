#pragma once

#include "admir/backend.hpp"
#include "admir/database.hpp"
#include "admir/grounding.hpp"
#include "admir/prompts.hpp"
#include "admir/subjects.hpp"
#include "admir/tools.hpp"
#include "admir/trace.hpp"

namespace admir::agent {

class ZeroDuration : public Error {
 public:
  using Error::Error;
};

struct SessionConfig {
  int t_max = 8;
  int global_browse_top_k = 40;
  int clip_search_top_k = 5;
  double stagnation_overlap_threshold = 0.6;
  int stagnation_hit_count = 2;  // redirect at >= this many overlapping logged ranges
  double redirect_window_secs = 15.0;
  double beta = 1.0;
  int subject_k = 3;
  double fusion_gap_max = 3.0;
  double fusion_affinity_min = 0.8;
  int literal_frame_cap = 32;
  int answer_word_limit = 25;
  double temperature = 0.0;
  bool record_timing = false;  // off by default: traces stay byte-stable

  void validate() const;
  nlohmann::json to_json() const;
  tools::ToolConfig tool_config() const;
};

/// Everything the controller is conditioned on.
struct AgentState {
  std::string query;
  double video_duration = 0.0;
  tools::GlobalContext global;
  std::vector<subjects::ActiveSubject> active_subjects;
  std::vector<StepRecord> history;          // loop steps, t >= 0
  std::vector<std::string> rejection_notes;  // shown verbatim in the prompt history
  std::vector<TimeRange> queried_ranges;     // ranges actually executed

  int next_step() const { return static_cast<int>(history.size()); }
};

enum class StagnationDecision { Proceed, Redirect };

/// Overlap(i) = |intersection(next, logged_i)| / duration(next), over distinct
/// logged ranges; Redirect once at least `hit_count` of them exceed the
/// threshold.
StagnationDecision check_stagnation(const std::vector<TimeRange>& logged, const TimeRange& next,
                                    double overlap_threshold = 0.6, int hit_count = 2);

/// Boundary window ([0, w] or [duration - w, duration]) that history covers
/// least; coverage is summed intersection with the logged ranges. Ties pick
/// the opening window.
TimeRange force_redirect(double video_duration, const std::vector<TimeRange>& logged,
                         double window_secs = 15.0);

/// Appends the literal "Reject: Weak Evidence" note (plus any extra verifier
/// reason) to the history; the step counter advances with it.
void record_rejection(AgentState& state, const FinishAction& rejected, const std::string& thought,
                      const std::string& reason);

/// Serialized controller request: system prompt plus query, global context,
/// active subjects, and the full step history including rejection notes.
backend::ChatRequest build_controller_prompt(const AgentState& state,
                                             const PromptLibrary& prompts,
                                             const SessionConfig& config);

/// One policy call: parses the thought and exactly one tool call. An
/// unparseable reply gets one repair re-prompt; a second failure yields an
/// InvalidAction (the step still counts, with a no-op observation).
struct StepProposal {
  std::string thought;
  Action action;
};
StepProposal step(const AgentState& state, backend::Backend& backend,
                  const PromptLibrary& prompts, const SessionConfig& config);

struct SessionResult {
  enum class Status { Verified, Failure };
  Status status = Status::Failure;
  std::string answer;  // refined final answer, or the flagged unverified draft
  Trace trace;

  bool verified() const { return status == Status::Verified; }
};

/// Full inference pass: pre-emptive global browse, subject activation, then
/// the Think-Act-Observe loop until a verified finish or t_max exhaustion.
SessionResult run_session(const VideoDatabase& db, const std::string& query,
                          backend::Backend& backend, const PromptLibrary& prompts,
                          const SessionConfig& config = {});

}  // namespace admir::agent
