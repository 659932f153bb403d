#include "admir/ingest.hpp"

#include <cmath>
#include <fstream>
#include <future>
#include <set>
#include <sstream>

#include "admir/imaging.hpp"
#include "admir/jsonutil.hpp"

namespace admir::ingest {

using backend::Backend;
using backend::ChatMessage;
using backend::ChatRequest;
using backend::ImageRef;
using backend::ModelRole;
using nlohmann::json;

std::vector<TimeRange> segment_clips(double duration, double clip_secs) {
  if (duration <= 0) throw InvalidDuration("video duration must be positive");
  if (clip_secs <= 0) throw std::invalid_argument("clip length must be positive");

  std::vector<TimeRange> spans;
  double start = 0.0;
  while (start < duration) {
    const double end = std::min(start + clip_secs, duration);
    spans.push_back({start, end});
    start = end;
  }
  return spans;
}

namespace {

std::string format_seconds(double t) {
  std::ostringstream ss;
  ss << t;
  return ss.str();
}

PartialRegistry parse_partial_registry(const json& registry_json, const TimeRange& span) {
  PartialRegistry partial;
  if (!registry_json.is_object()) return partial;
  for (const auto& [key, value] : registry_json.items()) {
    if (!value.is_object()) continue;
    PartialSubject subject;
    subject.name = trim(value.value("name", key));
    if (subject.name.empty()) continue;
    subject.appearance = string_list(value.value("appearance", json()));
    subject.identity = string_list(value.value("identity", json()));
    subject.first_seen =
        parse_timestamp(value.value("first_seen", json())).value_or(span.start);
    partial.push_back(std::move(subject));
  }
  return partial;
}

}  // namespace

ClipBuildResult build_clip_record(const TimeRange& span,
                                  const std::vector<FrameIndex::Entry>& frames,
                                  const std::vector<Utterance>& transcript, Backend& backend,
                                  const PromptLibrary& prompts, const std::string& video_id,
                                  int clip_index, int max_frames) {
  ChatRequest request;
  request.role = ModelRole::Captioner;
  request.messages.push_back({ChatMessage::Kind::System, prompts.get("captioning")});
  request.messages.push_back(
      {ChatMessage::Kind::User, "Video " + video_id + ", clip " + format_seconds(span.start) +
                                    "-" + format_seconds(span.end) + " s."});
  size_t step = 1;
  if (max_frames > 0 && frames.size() > static_cast<size_t>(max_frames))
    step = (frames.size() + max_frames - 1) / static_cast<size_t>(max_frames);
  for (size_t i = 0; i < frames.size(); i += step)
    request.images.push_back({frames[i].path.string(), "auto"});

  auto response = backend.chat(request);
  auto parsed = find_json_object(response.text);
  if (!parsed || !parsed->contains("clip_description")) {
    // One repair re-prompt with the parse error, then surface.
    ChatRequest repair = request;
    repair.messages.push_back(
        {ChatMessage::Kind::User,
         "Your previous reply was not valid JSON with the required fields "
         "(missing clip_description). Return ONLY the JSON object in the template."});
    response = backend.chat(repair);
    parsed = find_json_object(response.text);
    if (!parsed || !parsed->contains("clip_description"))
      throw TemplateParseError("captioner reply lacks the structured template for clip " +
                               std::to_string(clip_index));
  }

  ClipBuildResult result;
  result.record.index = clip_index;
  result.record.start = span.start;
  result.record.end = span.end;
  result.record.caption = trim(parsed->value("clip_description", ""));

  std::vector<std::string> parts;
  for (const auto& u : transcript)
    if (u.start < span.end && u.end >= span.start) parts.push_back(u.text);
  result.record.transcript = join(parts, " ");

  result.registry = parse_partial_registry(parsed->value("subject_registry", json::object()), span);
  return result;
}

std::vector<std::string> extract_frame_text(const fs::path& frame, Backend& backend,
                                            const PromptLibrary& prompts) {
  if (!fs::exists(frame)) throw admir::imaging::AssetError("frame asset not found: " + frame.string());

  ChatRequest request;
  request.role = ModelRole::Captioner;
  request.messages.push_back({ChatMessage::Kind::System, prompts.get("ocr")});
  request.messages.push_back({ChatMessage::Kind::User, "Frame: " + frame.filename().string()});
  request.images.push_back({frame.string(), "high"});

  const auto response = backend.chat(request);
  std::vector<std::string> lines;
  for (const auto& raw : split(response.text, '\n')) {
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (to_lower(line) == "no_text") continue;
    lines.push_back(line);
  }
  return lines;
}

namespace {

std::string normalized_name(const std::string& name) { return to_lower(trim(name)); }

void union_into(std::vector<std::string>& target, const std::vector<std::string>& source) {
  for (const auto& item : source) {
    const std::string t = trim(item);
    if (t.empty()) continue;
    const bool seen = std::any_of(target.begin(), target.end(),
                                  [&](const std::string& x) { return trim(x) == t; });
    if (!seen) target.push_back(t);
  }
}

std::vector<SubjectProfile> merge_deterministic(const std::vector<PartialRegistry>& partials) {
  std::vector<SubjectProfile> merged;
  for (const auto& partial : partials) {
    for (const auto& subject : partial) {
      const std::string key = normalized_name(subject.name);
      auto it = std::find_if(merged.begin(), merged.end(), [&](const SubjectProfile& p) {
        return normalized_name(p.name) == key;
      });
      if (it == merged.end()) {
        SubjectProfile profile;
        profile.name = trim(subject.name);
        profile.appearance = {};
        profile.identity = {};
        profile.first_seen = subject.first_seen;
        union_into(profile.appearance, subject.appearance);
        union_into(profile.identity, subject.identity);
        merged.push_back(std::move(profile));
      } else {
        it->first_seen = std::min(it->first_seen, subject.first_seen);
        union_into(it->appearance, subject.appearance);
        union_into(it->identity, subject.identity);
      }
    }
  }
  for (size_t i = 0; i < merged.size(); ++i) merged[i].id = "s" + std::to_string(i);
  return merged;
}

}  // namespace

std::vector<SubjectProfile> merge_subject_registries(const std::vector<PartialRegistry>& partials,
                                                     MergeMode mode, Backend* backend,
                                                     const PromptLibrary* prompts) {
  if (mode == MergeMode::Deterministic || partials.empty()) return merge_deterministic(partials);

  if (!backend || !prompts)
    throw std::invalid_argument("LLM merge mode needs a backend and prompt library");

  json registries = json::array();
  for (const auto& partial : partials) {
    json r = json::object();
    for (size_t i = 0; i < partial.size(); ++i) {
      json s;
      s["name"] = partial[i].name;
      s["appearance"] = partial[i].appearance;
      s["identity"] = partial[i].identity;
      s["first_seen"] = partial[i].first_seen;
      r["subject_" + std::to_string(i + 1)] = std::move(s);
    }
    registries.push_back(std::move(r));
  }

  const auto request = ChatRequest::simple(
      ModelRole::Captioner, "",
      prompts->render("registry_merge", {{"registries", registries.dump(2)}}));
  const auto response = backend->chat(request);
  const auto parsed = find_json_object(response.text);
  if (!parsed) return merge_deterministic(partials);  // unparseable merge reply

  // The merged object may be the registry itself or wrapped in subject_registry.
  const json& registry_json =
      parsed->contains("subject_registry") ? parsed->at("subject_registry") : *parsed;
  PartialRegistry flat = parse_partial_registry(registry_json, {0, 0});
  if (flat.empty()) return merge_deterministic(partials);
  return merge_deterministic({flat});
}

std::vector<Utterance> load_transcript(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read transcript: " + path.string());
  std::vector<Utterance> transcript;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("start") || !j.contains("end"))
      throw InputError(path.string() + ":" + std::to_string(lineno) +
                       ": expected {start, end, text}");
    transcript.push_back({j.at("start").get<double>(), j.at("end").get<double>(),
                          j.value("text", "")});
  }
  std::sort(transcript.begin(), transcript.end(),
            [](const Utterance& a, const Utterance& b) { return a.start < b.start; });
  return transcript;
}

namespace {

template <typename F>
auto run_stage(const std::string& stage, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

}  // namespace

VideoDatabase build_database(const VideoMeta& meta, const fs::path& frames_dir,
                             std::vector<Utterance> transcript, Backend& backend,
                             const PromptLibrary& prompts, const IngestConfig& config,
                             const fs::path& out_dir) {
  if (meta.duration <= 0) throw InvalidDuration("video duration must be positive");

  const FrameIndex frames = run_stage("frames", [&] {
    FrameIndex index = FrameIndex::scan(frames_dir);
    if (index.empty()) throw InputError("no frame assets found in " + frames_dir.string());
    return index;
  });

  const auto spans = run_stage("segment", [&] {
    return segment_clips(meta.duration, config.clip_secs);
  });

  // Per-clip captioning; independent clips, so eligible for a worker pool.
  std::vector<ClipBuildResult> clip_results(spans.size());
  run_stage("caption", [&] {
    auto build_one = [&](size_t i) {
      clip_results[i] = build_clip_record(spans[i], frames.in_range(spans[i]), transcript,
                                          backend, prompts, meta.video_id, static_cast<int>(i),
                                          config.max_frames_per_caption);
    };
    if (config.jobs <= 1) {
      for (size_t i = 0; i < spans.size(); ++i) build_one(i);
    } else {
      std::vector<std::future<void>> pending;
      for (size_t i = 0; i < spans.size(); ++i)
        pending.push_back(std::async(std::launch::async, build_one, i));
      for (auto& f : pending) f.get();
    }
    return 0;
  });

  VideoDatabase db;
  db.meta = meta;
  db.transcript = std::move(transcript);
  std::sort(db.transcript.begin(), db.transcript.end(),
            [](const Utterance& a, const Utterance& b) { return a.start < b.start; });
  for (auto& result : clip_results) db.clips.push_back(std::move(result.record));

  run_stage("ocr", [&] {
    if (config.ocr_stride <= 0) return 0;
    const auto& entries = frames.entries();
    for (size_t i = 0; i < entries.size(); i += static_cast<size_t>(config.ocr_stride)) {
      auto lines = extract_frame_text(entries[i].path, backend, prompts);
      const double t = entries[i].timestamp;
      if (!lines.empty()) {
        for (auto& clip : db.clips) {
          if (t >= clip.start && t < clip.end) {
            for (const auto& line : lines) clip.ocr_lines.push_back(line);
            break;
          }
        }
      }
      db.ocr_by_frame[t] = std::move(lines);
    }
    return 0;
  });

  run_stage("merge", [&] {
    std::vector<PartialRegistry> partials;
    for (const auto& result : clip_results) partials.push_back(result.registry);
    db.subjects = merge_subject_registries(partials, config.merge, &backend, &prompts);
    for (auto& s : db.subjects)
      s.first_seen = std::clamp(s.first_seen, 0.0, meta.duration);
    return 0;
  });

  run_stage("embed", [&] {
    std::vector<std::string> texts;
    for (const auto& clip : db.clips) texts.push_back(clip.embedded_text());
    for (const auto& subject : db.subjects) texts.push_back(subject.profile_text());
    if (texts.empty()) return 0;
    const auto vectors = backend.embed(texts);
    for (size_t i = 0; i < db.clips.size(); ++i) db.clips[i].embedding = vectors[i];
    for (size_t i = 0; i < db.subjects.size(); ++i)
      db.subjects[i].embedding = vectors[db.clips.size() + i];
    return 0;
  });

  // Persist into a temp sibling, then swap; a failed build leaves no output.
  const fs::path tmp_dir = out_dir.string() + ".building";
  run_stage("persist", [&] {
    std::error_code ec;
    fs::remove_all(tmp_dir, ec);
    try {
      fs::create_directories(tmp_dir);
      if (config.copy_frames) {
        const fs::path frame_out = tmp_dir / "frames";
        fs::create_directories(frame_out);
        for (const auto& entry : frames.entries())
          fs::copy_file(entry.path, frame_out / entry.path.filename(),
                        fs::copy_options::overwrite_existing);
        db.meta.frame_dir = "frames";
      } else {
        db.meta.frame_dir = fs::absolute(frames_dir).string();
      }
      db.save(tmp_dir);
      fs::remove_all(out_dir);
      fs::rename(tmp_dir, out_dir);
    } catch (...) {
      fs::remove_all(tmp_dir, ec);
      throw;
    }
    return 0;
  });

  return VideoDatabase::load(out_dir);
}

}  // namespace admir::ingest
