#pragma once

#include <array>

#include "admir/actions.hpp"
#include "admir/backend.hpp"
#include "admir/database.hpp"
#include "admir/imaging.hpp"
#include "admir/prompts.hpp"
#include "admir/retrieval.hpp"

namespace admir::tools {

class NoFramesInRange : public Error {
 public:
  using Error::Error;
};

/// Structured global summary produced by the pre-emptive browse step.
struct GlobalContext {
  std::string summary;                       // narrative reconstruction
  std::string genre;                         // macro-genre label
  std::vector<std::string> entities;         // inferred key entities
  std::vector<std::string> explicit_text;    // on-screen text found in logs
  std::string mismatch;                      // audio/visual contradictions
  std::string answer;                        // direct answer to the seed query
  bool degraded = false;                     // template parse failed; summary is raw text

  nlohmann::json to_json() const;
  static GlobalContext from_json(const nlohmann::json& j);

  /// Rendering used in controller prompts and observations.
  std::string render() const;
};

struct ToolConfig {
  int global_browse_top_k = 40;
  int clip_search_top_k = 5;
  double beta = 1.0;
  double fusion_gap_max = 3.0;
  double fusion_affinity_min = 0.8;
  int literal_frame_cap = 32;       // dense-mode attachment ceiling
  double semantic_stride_secs = 5;  // one keyframe per clip length
  int grid_samples = 64;
};

/// Top-k clips by hybrid score, re-ordered chronologically, then the forensic
/// prompt synthesizes a structured summary from captions + transcript.
/// A reply that resists the one repair re-prompt degrades to raw text.
GlobalContext global_browse(const VideoDatabase& db, const std::string& query,
                            backend::Backend& backend, const PromptLibrary& prompts,
                            int top_k = 40);

/// rewrite -> hybrid search -> temporal fusion; the observation lists each
/// event block with span, score and member captions.
agent::Observation clip_search_tool(const VideoDatabase& db, const std::string& query,
                                    backend::Backend& backend, const PromptLibrary& prompts,
                                    const ToolConfig& config = {});

/// Variable-density inspection: literal mode attaches every frame in range
/// (thinned to the cap), semantic mode one keyframe per 5 s sub-span.
agent::Observation frame_inspect(const VideoDatabase& db, const TimeRange& range,
                                 agent::InspectMode mode, const std::string& query,
                                 backend::Backend& backend, const PromptLibrary& prompts,
                                 const ToolConfig& config = {});

// ---------------------------------------------------------------------------
// Spatio-temporal grid projection
// ---------------------------------------------------------------------------

struct GridCell {
  double timestamp = 0.0;
  fs::path frame;
};

/// 64 uniform samples snapped to available frames, split into 16 batches of 4
/// in temporal order; cells read top-left, top-right, bottom-left,
/// bottom-right.
struct GridPlan {
  TimeRange range;
  std::vector<std::array<GridCell, 4>> batches;  // 16 when fully populated

  size_t sample_count() const { return batches.size() * 4; }
  uint64_t content_hash() const;
};

GridPlan plan_grid_projection(const TimeRange& range, const FrameIndex& frames, int samples = 64);

/// 2x2 composite: output is exactly 2H x 2W of the first frame; mismatched
/// inputs are scaled to match.
imaging::Image compose_grid(const std::array<imaging::Image, 4>& cells);

/// Persuasion analysis over the composed grids.
struct ExpertFinding {
  std::string narrative;
  std::string strategy;
  std::vector<std::string> symbols;  // "symbol -> meaning (grounding)" lines
  std::string answer;                // direct answer to the focus question
  bool degraded = false;

  std::string render() const;
  nlohmann::json to_json() const;
};

/// Composes the 16 grids (cached under <db>/grids keyed by range and plan
/// hash), sends one vision request carrying grids + transcript slice +
/// global summary + focus question, parses the structured reply.
ExpertFinding communication_expert(const VideoDatabase& db, const TimeRange& range,
                                   const std::string& focus, const GlobalContext& global,
                                   backend::Backend& backend, const PromptLibrary& prompts,
                                   const ToolConfig& config = {});

/// Observation wrapper used by the agent loop.
agent::Observation communication_expert_observation(const VideoDatabase& db,
                                                    const TimeRange& range,
                                                    const std::string& focus,
                                                    const GlobalContext& global,
                                                    backend::Backend& backend,
                                                    const PromptLibrary& prompts,
                                                    const ToolConfig& config = {});

}  // namespace admir::tools
