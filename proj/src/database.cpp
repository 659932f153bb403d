#include "admir/database.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace admir {

using nlohmann::json;

namespace {
constexpr int kLayoutVersion = 1;

json parse_line(const std::string& line, const std::string& file, size_t lineno) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded())
    throw InputError(file + ":" + std::to_string(lineno) + ": invalid JSON record");
  return j;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read file: " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) lines.push_back(line);
  }
  return lines;
}

}  // namespace

std::string ClipRecord::embedded_text() const {
  if (transcript.empty()) return caption;
  if (caption.empty()) return transcript;
  return caption + " " + transcript;
}

std::string ClipRecord::lexical_document() const {
  std::string doc = embedded_text();
  for (const auto& line : ocr_lines) {
    doc += " ";
    doc += line;
  }
  return to_lower(doc);
}

std::string SubjectProfile::profile_text() const {
  std::string text = name;
  if (!appearance.empty()) text += ". " + join(appearance, "; ");
  if (!identity.empty()) text += ". " + join(identity, "; ");
  return text;
}

FrameIndex FrameIndex::scan(const fs::path& dir) {
  if (!fs::is_directory(dir)) return {};
  std::vector<Entry> entries;
  for (const auto& item : fs::directory_iterator(dir)) {
    if (!item.is_regular_file()) continue;
    const std::string ext = to_lower(item.path().extension().string());
    if (ext != ".jpg" && ext != ".jpeg" && ext != ".png" && ext != ".ppm") continue;
    const std::string stem = item.path().stem().string();
    try {
      size_t used = 0;
      const double t = std::stod(stem, &used);
      if (used != stem.size() || t < 0) continue;
      entries.push_back({t, item.path()});
    } catch (const std::exception&) {
      continue;  // not a timestamped frame
    }
  }
  return from_entries(std::move(entries));
}

FrameIndex FrameIndex::from_entries(std::vector<Entry> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.timestamp < b.timestamp; });
  FrameIndex index;
  index.entries_ = std::move(entries);
  return index;
}

std::vector<FrameIndex::Entry> FrameIndex::in_range(const TimeRange& range) const {
  std::vector<Entry> out;
  for (const auto& e : entries_)
    if (e.timestamp >= range.start && e.timestamp < range.end) out.push_back(e);
  return out;
}

std::optional<FrameIndex::Entry> FrameIndex::nearest(double t) const {
  if (entries_.empty()) return std::nullopt;
  const Entry* best = &entries_.front();
  for (const auto& e : entries_) {
    if (std::abs(e.timestamp - t) < std::abs(best->timestamp - t)) best = &e;
  }
  return *best;
}

namespace {

json clip_to_json(const ClipRecord& c) {
  json j;
  j["i"] = c.index;
  j["start"] = c.start;
  j["end"] = c.end;
  j["caption"] = c.caption;
  j["transcript"] = c.transcript;
  j["ocr"] = c.ocr_lines;
  j["embedding"] = encode_embedding(c.embedding);
  return j;
}

ClipRecord clip_from_json(const json& j) {
  ClipRecord c;
  c.index = j.at("i").get<int>();
  c.start = j.at("start").get<double>();
  c.end = j.at("end").get<double>();
  c.caption = j.value("caption", "");
  c.transcript = j.value("transcript", "");
  c.ocr_lines = j.value("ocr", std::vector<std::string>{});
  c.embedding = decode_embedding(j.value("embedding", ""));
  return c;
}

json subject_to_json(const SubjectProfile& s) {
  json j;
  j["id"] = s.id;
  j["name"] = s.name;
  j["appearance"] = s.appearance;
  j["identity"] = s.identity;
  j["first_seen"] = s.first_seen;
  j["embedding"] = encode_embedding(s.embedding);
  return j;
}

SubjectProfile subject_from_json(const json& j) {
  SubjectProfile s;
  s.id = j.at("id").get<std::string>();
  s.name = j.at("name").get<std::string>();
  s.appearance = j.value("appearance", std::vector<std::string>{});
  s.identity = j.value("identity", std::vector<std::string>{});
  s.first_seen = j.value("first_seen", 0.0);
  s.embedding = decode_embedding(j.value("embedding", ""));
  return s;
}

}  // namespace

void VideoDatabase::save(const fs::path& dir) const {
  fs::create_directories(dir);

  json meta_json;
  meta_json["version"] = kLayoutVersion;
  meta_json["video_id"] = meta.video_id;
  meta_json["duration"] = meta.duration;
  meta_json["fps"] = meta.fps;
  meta_json["frame_dir"] = meta.frame_dir;
  write_file(dir / "meta.json", meta_json.dump(2) + "\n");

  std::string clips_out;
  for (const auto& c : clips) clips_out += clip_to_json(c).dump() + "\n";
  write_file(dir / "clips.jsonl", clips_out);

  json subjects_json;
  subjects_json["subjects"] = json::array();
  for (const auto& s : subjects) subjects_json["subjects"].push_back(subject_to_json(s));
  write_file(dir / "subjects.json", subjects_json.dump(2) + "\n");

  std::string transcript_out;
  for (const auto& u : transcript) {
    json j;
    j["start"] = u.start;
    j["end"] = u.end;
    j["text"] = u.text;
    transcript_out += j.dump() + "\n";
  }
  write_file(dir / "transcript.jsonl", transcript_out);

  std::string ocr_out;
  for (const auto& [t, lines] : ocr_by_frame) {
    json j;
    j["t"] = t;
    j["lines"] = lines;
    ocr_out += j.dump() + "\n";
  }
  write_file(dir / "ocr.jsonl", ocr_out);
}

VideoDatabase VideoDatabase::load(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InputError("database directory not found: " + dir.string());
  const fs::path meta_path = dir / "meta.json";
  json meta_json = json::parse(read_file(meta_path), nullptr, false);
  if (meta_json.is_discarded()) throw InputError("malformed database meta: " + meta_path.string());
  if (meta_json.value("version", 0) != kLayoutVersion)
    throw InputError("unsupported database layout version in " + meta_path.string());

  VideoDatabase db;
  db.root = dir;
  db.meta.video_id = meta_json.value("video_id", "");
  db.meta.duration = meta_json.value("duration", 0.0);
  db.meta.fps = meta_json.value("fps", 1.0);
  db.meta.frame_dir = meta_json.value("frame_dir", "frames");
  if (db.meta.duration <= 0) throw InputError("database has non-positive duration");
  if (db.meta.fps <= 0) throw InputError("database has non-positive fps");

  size_t lineno = 0;
  for (const auto& line : read_lines(dir / "clips.jsonl"))
    db.clips.push_back(clip_from_json(parse_line(line, "clips.jsonl", ++lineno)));
  std::sort(db.clips.begin(), db.clips.end(),
            [](const ClipRecord& a, const ClipRecord& b) { return a.start < b.start; });

  json subjects_json = json::parse(read_file(dir / "subjects.json"), nullptr, false);
  if (subjects_json.is_discarded()) throw InputError("malformed subjects.json in " + dir.string());
  for (const auto& s : subjects_json.value("subjects", json::array()))
    db.subjects.push_back(subject_from_json(s));
  std::set<std::string> subject_ids;
  for (const auto& s : db.subjects)
    if (!subject_ids.insert(s.id).second)
      throw InputError("duplicate subject id '" + s.id + "' in " + dir.string());

  if (fs::exists(dir / "transcript.jsonl")) {
    lineno = 0;
    for (const auto& line : read_lines(dir / "transcript.jsonl")) {
      const json j = parse_line(line, "transcript.jsonl", ++lineno);
      db.transcript.push_back({j.at("start").get<double>(), j.at("end").get<double>(),
                               j.value("text", "")});
    }
    std::sort(db.transcript.begin(), db.transcript.end(),
              [](const Utterance& a, const Utterance& b) { return a.start < b.start; });
  }

  if (fs::exists(dir / "ocr.jsonl")) {
    lineno = 0;
    for (const auto& line : read_lines(dir / "ocr.jsonl")) {
      const json j = parse_line(line, "ocr.jsonl", ++lineno);
      db.ocr_by_frame[j.at("t").get<double>()] = j.value("lines", std::vector<std::string>{});
    }
  }

  const fs::path frame_dir = fs::path(db.meta.frame_dir).is_absolute()
                                 ? fs::path(db.meta.frame_dir)
                                 : dir / db.meta.frame_dir;
  db.frames = FrameIndex::scan(frame_dir);
  return db;
}

std::vector<Utterance> VideoDatabase::utterances_in(const TimeRange& span) const {
  // Utterances are closed intervals, spans half-open: [us, ue] hits [s, e).
  std::vector<Utterance> out;
  for (const auto& u : transcript)
    if (u.start < span.end && u.end >= span.start) out.push_back(u);
  return out;
}

std::string VideoDatabase::transcript_slice(const TimeRange& span) const {
  std::vector<std::string> parts;
  for (const auto& u : utterances_in(span)) parts.push_back(u.text);
  return join(parts, " ");
}

std::string VideoDatabase::full_transcript_text() const {
  std::vector<std::string> parts;
  for (const auto& u : transcript) parts.push_back(u.text);
  return join(parts, " ");
}

std::vector<std::string> VideoDatabase::subject_names() const {
  std::vector<std::string> names;
  names.reserve(subjects.size());
  for (const auto& s : subjects) names.push_back(s.name);
  return names;
}

bool operator==(const ClipRecord& a, const ClipRecord& b) {
  return a.index == b.index && a.start == b.start && a.end == b.end && a.caption == b.caption &&
         a.transcript == b.transcript && a.ocr_lines == b.ocr_lines && a.embedding == b.embedding;
}

bool operator==(const SubjectProfile& a, const SubjectProfile& b) {
  return a.id == b.id && a.name == b.name && a.appearance == b.appearance &&
         a.identity == b.identity && a.first_seen == b.first_seen && a.embedding == b.embedding;
}

bool operator==(const Utterance& a, const Utterance& b) {
  return a.start == b.start && a.end == b.end && a.text == b.text;
}

}  // namespace admir
