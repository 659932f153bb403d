#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "admir/common.hpp"

namespace admir {

/// Raised when a pipeline stage fails; carries the stage tag for diagnostics.
class StageError : public Error {
 public:
  StageError(const std::string& stage, const std::string& msg)
      : Error("[" + stage + "] " + msg), stage_(stage) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct VideoMeta {
  std::string video_id;
  double duration = 0.0;  // seconds
  double fps = 1.0;       // frame rate of the extracted assets
  std::string frame_dir = "frames";
};

struct Utterance {
  double start = 0.0;
  double end = 0.0;
  std::string text;
};

/// One fixed-length temporal clip with its attached text modalities.
struct ClipRecord {
  int index = 0;
  double start = 0.0;
  double end = 0.0;
  std::string caption;     // visual narrative description
  std::string transcript;  // transcript slice overlapping the span (may be empty)
  std::vector<std::string> ocr_lines;
  std::vector<float> embedding;  // over embedded_text()

  TimeRange span() const { return {start, end}; }

  /// Text the dense index embeds: caption plus transcript slice.
  std::string embedded_text() const;

  /// Lowercased lexical document: caption, transcript and OCR lines.
  std::string lexical_document() const;
};

struct SubjectProfile {
  std::string id;
  std::string name;
  std::vector<std::string> appearance;
  std::vector<std::string> identity;
  double first_seen = 0.0;
  std::vector<float> embedding;  // over profile_text()

  std::string profile_text() const;
};

/// Timestamp -> frame asset mapping, built by scanning a frame directory for
/// files named <t>.<ext> with ext in {jpg, jpeg, png, ppm}.
class FrameIndex {
 public:
  struct Entry {
    double timestamp = 0.0;
    fs::path path;
  };

  static FrameIndex scan(const fs::path& dir);
  static FrameIndex from_entries(std::vector<Entry> entries);

  const std::vector<Entry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  size_t size() const { return entries_.size(); }

  /// Frames with start <= t < end.
  std::vector<Entry> in_range(const TimeRange& range) const;

  /// Frame nearest to t; ties resolve to the earlier frame.
  std::optional<Entry> nearest(double t) const;

 private:
  std::vector<Entry> entries_;  // sorted by timestamp
};

/// Persisted per-video memory: clips, subject registry, transcript, frames.
///
/// On-disk layout (version 1, all text UTF-8):
///   meta.json        {version, video_id, duration, fps, frame_dir}
///   clips.jsonl      one ClipRecord per line; embeddings base64 LE f32
///   subjects.json    {"subjects": [...]}
///   transcript.jsonl {start, end, text} per utterance
///   ocr.jsonl        {t, lines} per sampled frame
///   frames/<t>.<ext> image assets at `fps`
struct VideoDatabase {
  VideoMeta meta;
  std::vector<ClipRecord> clips;
  std::vector<SubjectProfile> subjects;
  std::vector<Utterance> transcript;
  FrameIndex frames;
  std::map<double, std::vector<std::string>> ocr_by_frame;
  fs::path root;  // directory this database was loaded from / saved to

  void save(const fs::path& dir) const;
  static VideoDatabase load(const fs::path& dir);

  /// Utterances whose [start, end] intersects the half-open span, in order.
  std::vector<Utterance> utterances_in(const TimeRange& span) const;
  std::string transcript_slice(const TimeRange& span) const;
  std::string full_transcript_text() const;

  std::vector<std::string> subject_names() const;
};

/// Field-for-field equality, used by round-trip checks.
bool operator==(const ClipRecord& a, const ClipRecord& b);
bool operator==(const SubjectProfile& a, const SubjectProfile& b);
bool operator==(const Utterance& a, const Utterance& b);

}  // namespace admir
