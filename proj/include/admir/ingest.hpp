#pragma once

#include "admir/backend.hpp"
#include "admir/database.hpp"
#include "admir/prompts.hpp"

namespace admir::ingest {

class InvalidDuration : public Error {
 public:
  using Error::Error;
};

/// Structured model response is missing required template fields, after one
/// repair re-prompt.
class TemplateParseError : public Error {
 public:
  using Error::Error;
};

/// Subject data as extracted per clip, before registry merging assigns ids
/// and embeddings.
struct PartialSubject {
  std::string name;
  std::vector<std::string> appearance;
  std::vector<std::string> identity;
  double first_seen = 0.0;
};
using PartialRegistry = std::vector<PartialSubject>;

enum class MergeMode { Deterministic, Llm };

struct IngestConfig {
  double clip_secs = 5.0;
  int ocr_stride = 1;  // OCR every Nth indexed frame; 0 disables OCR
  MergeMode merge = MergeMode::Deterministic;
  int jobs = 1;                     // per-clip captioning workers
  bool copy_frames = true;          // copy frame assets into the database dir
  int max_frames_per_caption = 0;   // 0 = every frame in the span
};

/// Tiles [0, duration] into clip_secs-long spans; the final span may be short.
std::vector<TimeRange> segment_clips(double duration, double clip_secs);

/// Captions one clip and extracts its partial subject registry. The frames
/// within the span ride on one vision request; the transcript slice is picked
/// by timestamp overlap.
struct ClipBuildResult {
  ClipRecord record;
  PartialRegistry registry;
};
ClipBuildResult build_clip_record(const TimeRange& span,
                                  const std::vector<FrameIndex::Entry>& frames,
                                  const std::vector<Utterance>& transcript,
                                  backend::Backend& backend, const PromptLibrary& prompts,
                                  const std::string& video_id, int clip_index,
                                  int max_frames = 0);

/// OCR for one frame; the NO_TEXT sentinel maps to an empty list, lines are
/// trimmed and blank lines dropped.
std::vector<std::string> extract_frame_text(const fs::path& frame, backend::Backend& backend,
                                            const PromptLibrary& prompts);

/// Unifies per-clip registries. Deterministic mode matches subjects by
/// normalized name; LLM mode asks the captioner to merge and falls back to
/// deterministic on an unparseable reply. Earliest first_seen wins, list
/// fields are unioned preserving first-occurrence order.
std::vector<SubjectProfile> merge_subject_registries(const std::vector<PartialRegistry>& partials,
                                                     MergeMode mode,
                                                     backend::Backend* backend = nullptr,
                                                     const PromptLibrary* prompts = nullptr);

/// Runs the full Stage-I pipeline and persists the database to out_dir
/// (built in a temp sibling, swapped in atomically; a failed build leaves no
/// partial output). Returns the loaded database.
VideoDatabase build_database(const VideoMeta& meta, const fs::path& frames_dir,
                             std::vector<Utterance> transcript, backend::Backend& backend,
                             const PromptLibrary& prompts, const IngestConfig& config,
                             const fs::path& out_dir);

/// Reads a transcript.jsonl file ({start, end, text} per line).
std::vector<Utterance> load_transcript(const fs::path& path);

}  // namespace admir::ingest
