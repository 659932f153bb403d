#include "admir/agent.hpp"

#include <chrono>
#include <set>
#include <sstream>

namespace admir::agent {

using backend::Backend;
using backend::ChatMessage;
using backend::ChatRequest;
using backend::CountingBackend;
using backend::ModelRole;
using nlohmann::json;

void SessionConfig::validate() const {
  if (t_max < 1) throw std::invalid_argument("t_max must be >= 1");
  if (global_browse_top_k < 1 || clip_search_top_k < 1)
    throw std::invalid_argument("top-k values must be >= 1");
  if (stagnation_overlap_threshold <= 0 || stagnation_overlap_threshold > 1)
    throw std::invalid_argument("stagnation threshold must be in (0, 1]");
  if (stagnation_hit_count < 1) throw std::invalid_argument("stagnation hit count must be >= 1");
  if (redirect_window_secs <= 0) throw std::invalid_argument("redirect window must be positive");
  if (beta < 0) throw std::invalid_argument("beta must be >= 0");
  if (subject_k < 1) throw std::invalid_argument("subject k must be >= 1");
  if (answer_word_limit < 1) throw std::invalid_argument("answer word limit must be >= 1");
}

json SessionConfig::to_json() const {
  json j;
  j["t_max"] = t_max;
  j["global_browse_top_k"] = global_browse_top_k;
  j["clip_search_top_k"] = clip_search_top_k;
  j["stagnation_overlap_threshold"] = stagnation_overlap_threshold;
  j["stagnation_hit_count"] = stagnation_hit_count;
  j["redirect_window_secs"] = redirect_window_secs;
  j["beta"] = beta;
  j["subject_k"] = subject_k;
  j["fusion_gap_max"] = fusion_gap_max;
  j["fusion_affinity_min"] = fusion_affinity_min;
  j["answer_word_limit"] = answer_word_limit;
  return j;
}

tools::ToolConfig SessionConfig::tool_config() const {
  tools::ToolConfig cfg;
  cfg.global_browse_top_k = global_browse_top_k;
  cfg.clip_search_top_k = clip_search_top_k;
  cfg.beta = beta;
  cfg.fusion_gap_max = fusion_gap_max;
  cfg.fusion_affinity_min = fusion_affinity_min;
  cfg.literal_frame_cap = literal_frame_cap;
  return cfg;
}

StagnationDecision check_stagnation(const std::vector<TimeRange>& logged, const TimeRange& next,
                                    double overlap_threshold, int hit_count) {
  const double d = next.duration();
  if (d <= 0) throw ZeroDuration("stagnation check needs a positive-duration range");

  // Distinct logged ranges only.
  std::vector<TimeRange> distinct;
  for (const auto& range : logged) {
    const bool seen = std::any_of(distinct.begin(), distinct.end(), [&](const TimeRange& r) {
      return r.start == range.start && r.end == range.end;
    });
    if (!seen) distinct.push_back(range);
  }

  int hits = 0;
  for (const auto& range : distinct)
    if (intersection_length(next, range) / d > overlap_threshold) ++hits;
  return hits >= hit_count ? StagnationDecision::Redirect : StagnationDecision::Proceed;
}

TimeRange force_redirect(double video_duration, const std::vector<TimeRange>& logged,
                         double window_secs) {
  if (video_duration <= 0) throw ZeroDuration("force_redirect needs a positive duration");
  const TimeRange opening{0.0, std::min(window_secs, video_duration)};
  const TimeRange closing{std::max(0.0, video_duration - window_secs), video_duration};

  double opening_coverage = 0.0;
  double closing_coverage = 0.0;
  for (const auto& range : logged) {
    opening_coverage += intersection_length(opening, range);
    closing_coverage += intersection_length(closing, range);
  }
  return opening_coverage <= closing_coverage ? opening : closing;
}

void record_rejection(AgentState& state, const FinishAction& rejected, const std::string& thought,
                      const std::string& reason) {
  std::string note = "Reject: Weak Evidence";
  if (!reason.empty() && reason != "Weak Evidence") note += " (" + reason + ")";

  StepRecord record;
  record.step = state.next_step();
  record.thought = thought;
  record.action = rejected;
  record.observation.text = note;
  record.observation.payload["verdict"] = "reject";
  state.history.push_back(std::move(record));
  state.rejection_notes.push_back(note);
}

ChatRequest build_controller_prompt(const AgentState& state, const PromptLibrary& prompts,
                                    const SessionConfig& config) {
  std::ostringstream user;
  user << "QUESTION: " << state.query << "\n";
  user << "VIDEO DURATION: " << state.video_duration << " s\n";

  user << "\nGLOBAL CONTEXT:\n" << state.global.render() << "\n";

  if (!state.active_subjects.empty()) {
    user << "\nACTIVE SUBJECTS:\n";
    for (const auto& active : state.active_subjects)
      user << "- " << active.profile.name << " (first seen " << active.profile.first_seen
           << "s): " << active.profile.profile_text() << "\n";
  }

  user << "\nHISTORY:\n";
  if (state.history.empty()) {
    user << "(no steps yet)\n";
  } else {
    for (const auto& record : state.history) {
      user << "Step " << record.step << "\n";
      if (!record.thought.empty()) user << "Thought: " << record.thought << "\n";
      user << "Action: " << describe_action(record.action) << "\n";
      user << "Observation: " << record.observation.text << "\n";
    }
  }
  user << "\nRespond with a brief Thought, then exactly one tool call.";

  ChatRequest request;
  request.role = ModelRole::Controller;
  request.temperature = config.temperature;
  request.messages.push_back({ChatMessage::Kind::System, prompts.get("controller_system")});
  request.messages.push_back({ChatMessage::Kind::User, user.str()});
  return request;
}

namespace {

Action parse_response(const backend::ChatResponse& response, double duration,
                      std::string* thought) {
  *thought = trim(response.text);
  // Strip a leading "Thought:" label if the model used one.
  if (to_lower(*thought).rfind("thought:", 0) == 0) *thought = trim(thought->substr(8));
  if (!response.tool_call) throw ActionParseError("reply contains no tool call");
  return parse_action(response.tool_call->name, response.tool_call->arguments, duration);
}

}  // namespace

StepProposal step(const AgentState& state, Backend& backend, const PromptLibrary& prompts,
                  const SessionConfig& config) {
  if (state.next_step() >= config.t_max)
    throw Error("step: session already at t_max");

  const ChatRequest request = build_controller_prompt(state, prompts, config);
  StepProposal proposal;

  std::string first_error;
  try {
    const auto response = backend.chat(request);
    proposal.action = parse_response(response, state.video_duration, &proposal.thought);
    return proposal;
  } catch (const ActionParseError& e) {
    first_error = e.what();
  }

  // One repair re-prompt carrying the parse error.
  ChatRequest repair = request;
  repair.messages.push_back(
      {ChatMessage::Kind::User,
       "Your previous reply could not be executed (" + first_error +
           "). Reply again with a brief Thought and exactly one tool call, e.g. "
           "{\"tool\": \"clip_search\", \"arguments\": {\"query\": \"...\"}}."});
  try {
    const auto response = backend.chat(repair);
    proposal.action = parse_response(response, state.video_duration, &proposal.thought);
    return proposal;
  } catch (const ActionParseError& e) {
    proposal.action = InvalidAction{proposal.thought, e.what()};
    return proposal;
  }
}

namespace {

// Anti-verification duplicate: a frame inspection re-checking what the
// immediately preceding successful expert call already established.
bool duplicates_expert_finding(const AgentState& state, const FrameInspectAction& inspect) {
  if (state.history.empty()) return false;
  const StepRecord& last = state.history.back();
  const auto* expert = std::get_if<CommExpertAction>(&last.action);
  if (!expert) return false;
  if (last.observation.payload.value("degraded", false)) return false;
  if (last.observation.payload.value("error", false)) return false;

  const double d = inspect.range.duration();
  if (d <= 0) return false;
  const bool range_duplicate =
      intersection_length(inspect.range, expert->range) / d > 0.6;
  if (!range_duplicate) return false;

  // Topic overlap: a content word of the inspection query already appears in
  // the expert focus or finding.
  const std::string expert_text = to_lower(expert->focus + " " + last.observation.text);
  for (const auto& token : split_whitespace(to_lower(inspect.query))) {
    std::string word;
    for (char c : token)
      if (std::isalnum(static_cast<unsigned char>(c))) word.push_back(c);
    if (word.size() >= 4 && expert_text.find(word) != std::string::npos) return true;
  }
  return false;
}

std::string format_range_text(const TimeRange& r) {
  std::ostringstream ss;
  ss << r.start << "-" << r.end << " s";
  return ss.str();
}

}  // namespace

SessionResult run_session(const VideoDatabase& db, const std::string& query, Backend& raw_backend,
                          const PromptLibrary& prompts, const SessionConfig& config) {
  config.validate();
  if (trim(query).empty()) throw std::invalid_argument("query must be nonempty");
  if (db.meta.duration <= 0) throw InputError("database has non-positive duration");

  CountingBackend backend(raw_backend);
  const tools::ToolConfig tool_cfg = config.tool_config();

  SessionResult result;
  result.trace.query = query;
  result.trace.config = config.to_json();

  AgentState state;
  state.query = query;
  state.video_duration = db.meta.duration;

  const auto session_start = std::chrono::steady_clock::now();
  auto elapsed_ms = [&] {
    if (!config.record_timing) return 0.0;
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                     session_start)
        .count();
  };

  std::string best_draft;
  // Evidence may cite step -1 (the pre-loop browse); keep it with the loop
  // steps for chain building.
  std::vector<StepRecord> evidence_steps;
  auto finish_trace = [&](SessionResult::Status status, const std::string& answer) {
    for (const auto& record : state.history) result.trace.steps.push_back(record);
    result.status = status;
    result.answer = answer;
    result.trace.footer.status =
        status == SessionResult::Status::Verified ? "verified" : "failure";
    result.trace.footer.answer = answer;
    result.trace.footer.answer_verified = status == SessionResult::Status::Verified;
    result.trace.footer.chat_calls = static_cast<int64_t>(backend.chat_calls());
    result.trace.footer.embed_calls = static_cast<int64_t>(backend.embed_calls());
    result.trace.footer.steps = static_cast<int>(state.history.size());
    return result;
  };

  // Backend failures (already retried inside Backend::chat) end the session
  // as a Failure carrying the trace so far.
  try {
    // Pre-loop: global browse, then subject activation against the fused anchor.
    state.global = tools::global_browse(db, query, backend, prompts, config.global_browse_top_k);
    {
      StepRecord preamble;
      preamble.step = -1;
      preamble.action = GlobalBrowseAction{query};
      preamble.observation.text = state.global.render();
      preamble.observation.payload = state.global.to_json();
      preamble.wall_ms = elapsed_ms();
      evidence_steps.push_back(preamble);
      result.trace.steps.push_back(std::move(preamble));
    }
    if (!db.subjects.empty()) {
      const auto anchor = subjects::build_anchor(query, state.global.summary, backend);
      state.active_subjects = subjects::activate_subjects(db.subjects, anchor, config.subject_k);
    }

    while (state.next_step() < config.t_max) {
    StepProposal proposal = step(state, backend, prompts, config);
    const int t = state.next_step();

    if (const auto* finish = std::get_if<FinishAction>(&proposal.action)) {
      std::vector<StepRecord> chain_steps = evidence_steps;
      chain_steps.insert(chain_steps.end(), state.history.begin(), state.history.end());
      const auto evidence = grounding::build_evidence_chain(chain_steps, finish->evidence);
      const auto anchors =
          grounding::extract_anchors(evidence, db.subject_names());
      const auto verdict = grounding::verify_grounding(finish->answer, evidence, anchors,
                                                       &backend, &prompts);
      json verdict_json;
      verdict_json["step"] = t;
      verdict_json["state"] = verdict.accepted() ? "accept" : "reject";
      verdict_json["reason"] = verdict.reason;
      verdict_json["matched_anchors"] = verdict.matched_anchors;
      result.trace.footer.verdicts.push_back(verdict_json);

      if (!verdict.accepted()) {
        best_draft = finish->answer;
        record_rejection(state, *finish, proposal.thought, verdict.reason);
        continue;
      }

      std::string answer = finish->answer;
      if (grounding::question_demands_visual(query) && !anchors.empty() &&
          anchors.matches_in(answer).empty()) {
        answer = grounding::repair_visual_anchor(answer, anchors, backend, prompts);
        const auto repaired_verdict =
            grounding::verify_grounding(answer, evidence, anchors, &backend, &prompts);
        json repair_json;
        repair_json["step"] = t;
        repair_json["state"] = repaired_verdict.accepted() ? "accept" : "reject";
        repair_json["reason"] = "after visual anchor repair: " + repaired_verdict.reason;
        repair_json["matched_anchors"] = repaired_verdict.matched_anchors;
        result.trace.footer.verdicts.push_back(repair_json);
      }
      const std::string final_answer =
          grounding::refine_answer(answer, backend, prompts, config.answer_word_limit);

      StepRecord record;
      record.step = t;
      record.thought = proposal.thought;
      record.action = proposal.action;
      record.observation.text = "Accepted (" + verdict.reason + "). Final answer: " + final_answer;
      record.observation.payload["verdict"] = "accept";
      record.observation.payload["final_answer"] = final_answer;
      record.wall_ms = elapsed_ms();
      state.history.push_back(std::move(record));
      return finish_trace(SessionResult::Status::Verified, final_answer);
    }

    // Tool actions.
    StepRecord record;
    record.step = t;
    record.thought = proposal.thought;
    record.action = proposal.action;

    try {
      if (std::holds_alternative<InvalidAction>(proposal.action)) {
        const auto& invalid = std::get<InvalidAction>(proposal.action);
        record.observation.text = "No-op: action could not be parsed (" + invalid.error + ").";
      } else if (const auto* browse = std::get_if<GlobalBrowseAction>(&proposal.action)) {
        const auto global =
            tools::global_browse(db, browse->query, backend, prompts, config.global_browse_top_k);
        record.observation.text = global.render();
        record.observation.payload = global.to_json();
      } else if (const auto* search = std::get_if<ClipSearchAction>(&proposal.action)) {
        record.observation =
            tools::clip_search_tool(db, search->query, backend, prompts, tool_cfg);
      } else if (auto* inspect = std::get_if<FrameInspectAction>(&proposal.action)) {
        if (duplicates_expert_finding(state, *inspect)) {
          record.observation.text =
              "Expert finding accepted; skipping redundant frame inspection of " +
              format_range_text(inspect->range) + ".";
          record.observation.payload["anti_verification"] = true;
        } else {
          std::string redirect_note;
          if (check_stagnation(state.queried_ranges, inspect->range,
                               config.stagnation_overlap_threshold,
                               config.stagnation_hit_count) == StagnationDecision::Redirect) {
            inspect->range = force_redirect(state.video_duration, state.queried_ranges,
                                            config.redirect_window_secs);
            redirect_note = "[Forced Redirection to " + format_range_text(inspect->range) + "] ";
            record.action = proposal.action;  // keep the overridden range in the trace
          }
          record.observation = tools::frame_inspect(db, inspect->range, inspect->mode,
                                                    inspect->query, backend, prompts, tool_cfg);
          record.observation.text = redirect_note + record.observation.text;
          state.queried_ranges.push_back(inspect->range);
        }
      } else if (auto* expert = std::get_if<CommExpertAction>(&proposal.action)) {
        std::string redirect_note;
        if (check_stagnation(state.queried_ranges, expert->range,
                             config.stagnation_overlap_threshold,
                             config.stagnation_hit_count) == StagnationDecision::Redirect) {
          expert->range = force_redirect(state.video_duration, state.queried_ranges,
                                         config.redirect_window_secs);
          redirect_note = "[Forced Redirection to " + format_range_text(expert->range) + "] ";
          record.action = proposal.action;
        }
        record.observation = tools::communication_expert_observation(
            db, expert->range, expert->focus, state.global, backend, prompts, tool_cfg);
        record.observation.text = redirect_note + record.observation.text;
        state.queried_ranges.push_back(expert->range);
      }
    } catch (const Error& e) {
      // Tool-level failure becomes an observation; the loop keeps going.
      record.observation.text = std::string("Tool error: ") + e.what();
      record.observation.payload["error"] = true;
    }

    record.wall_ms = elapsed_ms();
    state.history.push_back(std::move(record));
    }
  } catch (const backend::BackendError& e) {
    result.trace.footer.error = e.what();
    return finish_trace(SessionResult::Status::Failure, best_draft);
  }

  return finish_trace(SessionResult::Status::Failure, best_draft);
}

}  // namespace admir::agent
