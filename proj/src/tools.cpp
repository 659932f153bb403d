#include "admir/tools.hpp"

#include <cmath>
#include <sstream>

#include "admir/jsonutil.hpp"

namespace admir::tools {

using agent::InspectMode;
using agent::Observation;
using backend::Backend;
using backend::ChatMessage;
using backend::ChatRequest;
using backend::ImageRef;
using backend::ModelRole;
using nlohmann::json;

namespace {

std::string format_seconds(double t) {
  std::ostringstream ss;
  ss << t;
  return ss.str();
}

std::string format_span(double start, double end) {
  return format_seconds(start) + "-" + format_seconds(end) + " s";
}

}  // namespace

// ---------------------------------------------------------------------------
// Global Browse
// ---------------------------------------------------------------------------

json GlobalContext::to_json() const {
  json j;
  j["summary"] = summary;
  j["genre"] = genre;
  j["entities"] = entities;
  j["explicit_text"] = explicit_text;
  j["mismatch"] = mismatch;
  j["answer"] = answer;
  j["degraded"] = degraded;
  return j;
}

GlobalContext GlobalContext::from_json(const json& j) {
  GlobalContext g;
  g.summary = j.value("summary", "");
  g.genre = j.value("genre", "");
  g.entities = j.value("entities", std::vector<std::string>{});
  g.explicit_text = j.value("explicit_text", std::vector<std::string>{});
  g.mismatch = j.value("mismatch", "");
  g.answer = j.value("answer", "");
  g.degraded = j.value("degraded", false);
  return g;
}

std::string GlobalContext::render() const {
  std::string out;
  if (!genre.empty()) out += "Genre: " + genre + "\n";
  out += "Summary: " + summary;
  if (!entities.empty()) out += "\nKey entities: " + join(entities, ", ");
  if (!explicit_text.empty()) out += "\nOn-screen text: " + join(explicit_text, " | ");
  if (!mismatch.empty()) out += "\nA/V mismatch: " + mismatch;
  if (!answer.empty()) out += "\nInitial answer: " + answer;
  return out;
}

GlobalContext global_browse(const VideoDatabase& db, const std::string& query, Backend& backend,
                            const PromptLibrary& prompts, int top_k) {
  if (db.clips.empty()) throw retrieval::EmptyDatabase("database has no clips");

  // No rewrite here: browse is the very first call, keywords come from the
  // raw query tokens.
  retrieval::HybridQuery hybrid =
      retrieval::make_query(query, retrieval::fallback_keywords(query), backend, 1.0);
  const int k = std::min<int>(top_k, static_cast<int>(db.clips.size()));
  auto ranked = retrieval::search_clips(db, hybrid, k);

  // Chronological order regardless of retrieval rank.
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.clip_index < b.clip_index;
  });

  std::string visual_log;
  for (const auto& scored : ranked) {
    const ClipRecord& clip = db.clips[static_cast<size_t>(scored.clip_index)];
    visual_log += "[" + format_span(clip.start, clip.end) + "] " + clip.caption + "\n";
    if (!clip.ocr_lines.empty())
      visual_log += "  [POTENTIAL_TEXT]: " + join(clip.ocr_lines, " | ") + "\n";
  }

  const auto request = ChatRequest::simple(
      ModelRole::Controller, prompts.get("global_browse"),
      "USER QUERY: " + query + "\n\nVISUAL LOGS:\n" + visual_log + "\nAUDIO TRANSCRIPT:\n" +
          db.full_transcript_text());
  auto response = backend.chat(request);
  auto parsed = find_json_object(response.text);
  if (!parsed || !parsed->contains("narrative_reconstruction")) {
    ChatRequest repair = request;
    repair.messages.push_back({ChatMessage::Kind::User,
                               "Your previous reply was not the required JSON template. Return "
                               "ONLY the JSON object."});
    response = backend.chat(repair);
    parsed = find_json_object(response.text);
  }

  GlobalContext global;
  if (!parsed || !parsed->contains("narrative_reconstruction")) {
    global.summary = trim(response.text);
    global.degraded = true;
    return global;
  }
  global.summary = trim(parsed->value("narrative_reconstruction", ""));
  global.genre = trim(parsed->value("genre", ""));
  global.entities = string_list(parsed->value("inferred_objects", json()));
  global.explicit_text = string_list(parsed->value("explicit_text_found", json()));
  global.mismatch = trim(parsed->value("audio_visual_mismatch", ""));
  global.answer = trim(parsed->value("final_answer", ""));
  return global;
}

// ---------------------------------------------------------------------------
// Clip Search
// ---------------------------------------------------------------------------

Observation clip_search_tool(const VideoDatabase& db, const std::string& query, Backend& backend,
                             const PromptLibrary& prompts, const ToolConfig& config) {
  if (trim(query).empty()) throw std::invalid_argument("clip search query must be nonempty");

  const auto keywords = retrieval::rewrite_query(query, backend, prompts);
  const auto hybrid = retrieval::make_query(query, keywords, backend, config.beta);
  const auto ranked = retrieval::search_clips(
      db, hybrid, std::min<int>(config.clip_search_top_k, static_cast<int>(db.clips.size())));
  const auto blocks = retrieval::temporal_fusion(ranked, db, config.fusion_gap_max,
                                                 config.fusion_affinity_min);

  Observation obs;
  std::ostringstream text;
  text << "Found " << blocks.size() << " event block(s) for keywords [" << join(keywords, ", ")
       << "]:\n";
  json blocks_json = json::array();
  for (const auto& block : blocks) {
    text << "Event block " << format_span(block.start, block.end) << " (score "
         << block.score << "):\n";
    json members = json::array();
    for (int index : block.members) {
      const ClipRecord& clip = db.clips[static_cast<size_t>(index)];
      text << "  - clip " << index << " [" << format_span(clip.start, clip.end) << "] "
           << clip.caption << "\n";
      if (!clip.transcript.empty()) text << "    audio: " << clip.transcript << "\n";
      if (!clip.ocr_lines.empty())
        text << "    [POTENTIAL_TEXT]: " << join(clip.ocr_lines, " | ") << "\n";
      members.push_back(index);
    }
    blocks_json.push_back(
        {{"start", block.start}, {"end", block.end}, {"score", block.score},
         {"members", members}});
  }
  obs.text = text.str();
  obs.payload["blocks"] = std::move(blocks_json);
  obs.payload["keywords"] = keywords;
  return obs;
}

// ---------------------------------------------------------------------------
// Frame Inspect
// ---------------------------------------------------------------------------

namespace {

std::vector<FrameIndex::Entry> select_frames(const FrameIndex& frames, const TimeRange& range,
                                             InspectMode mode, const ToolConfig& config) {
  if (frames.empty()) throw NoFramesInRange("frame index is empty");

  std::vector<FrameIndex::Entry> selected;
  if (mode == InspectMode::Literal) {
    selected = frames.in_range(range);
    if (static_cast<int>(selected.size()) > config.literal_frame_cap) {
      // Uniform thinning to the attachment cap.
      std::vector<FrameIndex::Entry> thinned;
      const size_t n = selected.size();
      const size_t cap = static_cast<size_t>(config.literal_frame_cap);
      for (size_t i = 0; i < cap; ++i)
        thinned.push_back(selected[i * n / cap]);
      selected = std::move(thinned);
    }
  } else {
    const int keyframes =
        std::max(1, static_cast<int>(std::ceil(range.duration() / config.semantic_stride_secs)));
    const double step = range.duration() / keyframes;
    for (int i = 0; i < keyframes; ++i) {
      const double center = range.start + (i + 0.5) * step;
      if (auto entry = frames.nearest(center)) {
        if (selected.empty() || selected.back().path != entry->path)
          selected.push_back(*entry);
      }
    }
  }
  if (selected.empty()) {
    // Sub-second or frame-less range: fall back to the nearest single frame.
    if (auto entry = frames.nearest(range.midpoint())) selected.push_back(*entry);
  }
  if (selected.empty()) throw NoFramesInRange("no frames near " + format_span(range.start, range.end));
  return selected;
}

}  // namespace

Observation frame_inspect(const VideoDatabase& db, const TimeRange& range, InspectMode mode,
                          const std::string& query, Backend& backend,
                          const PromptLibrary& prompts, const ToolConfig& config) {
  if (!range.valid()) throw std::invalid_argument("frame inspect range end must exceed start");

  const auto selected = select_frames(db.frames, range, mode, config);
  const std::string prompt_name =
      mode == InspectMode::Literal ? "frame_inspect_literal" : "frame_inspect_semantic";

  ChatRequest request;
  request.role = ModelRole::Captioner;
  request.messages.push_back({ChatMessage::Kind::System, prompts.get(prompt_name)});
  std::string user = "QUESTION: " + query + "\nRange: " + format_span(range.start, range.end) +
                     "\nFrames attached in chronological order:";
  for (const auto& entry : selected) user += " " + format_seconds(entry.timestamp) + "s";
  request.messages.push_back({ChatMessage::Kind::User, std::move(user)});
  for (const auto& entry : selected)
    request.images.push_back({entry.path.string(), mode == InspectMode::Literal ? "high" : "auto"});

  const auto response = backend.chat(request);

  Observation obs;
  obs.text = trim(response.text);
  obs.payload["mode"] = agent::to_string(mode);
  obs.payload["frames_attached"] = selected.size();
  obs.payload["start"] = range.start;
  obs.payload["end"] = range.end;
  return obs;
}

// ---------------------------------------------------------------------------
// Grid projection
// ---------------------------------------------------------------------------

uint64_t GridPlan::content_hash() const {
  std::string key = format_span(range.start, range.end);
  for (const auto& batch : batches)
    for (const auto& cell : batch) {
      key += "|" + format_seconds(cell.timestamp);
      key += ":" + cell.frame.filename().string();
    }
  return fnv1a64(key);
}

GridPlan plan_grid_projection(const TimeRange& range, const FrameIndex& frames, int samples) {
  if (!range.valid()) throw std::invalid_argument("grid range end must exceed start");
  if (samples <= 0 || samples % 4 != 0)
    throw std::invalid_argument("grid sample count must be a positive multiple of 4");
  if (frames.empty()) throw NoFramesInRange("frame index is empty");

  GridPlan plan;
  plan.range = range;
  std::vector<GridCell> cells;
  cells.reserve(static_cast<size_t>(samples));
  for (int i = 0; i < samples; ++i) {
    // Uniform sample at the center of each sub-interval, snapped to the
    // nearest available frame (ties resolve to the earlier frame; duplicates
    // are expected when frames are scarce).
    const double t = range.start + (i + 0.5) * range.duration() / samples;
    const auto entry = frames.nearest(t);
    cells.push_back({entry->timestamp, entry->path});
  }

  for (size_t i = 0; i < cells.size(); i += 4) {
    std::array<GridCell, 4> batch{cells[i], cells[i + 1], cells[i + 2], cells[i + 3]};
    plan.batches.push_back(std::move(batch));
  }
  return plan;
}

imaging::Image compose_grid(const std::array<imaging::Image, 4>& cells) {
  for (const auto& cell : cells)
    if (cell.empty()) throw imaging::AssetError("compose_grid: empty cell image");

  const int w = cells[0].width;
  const int h = cells[0].height;

  imaging::Image out;
  out.width = 2 * w;
  out.height = 2 * h;
  out.pixels.assign(static_cast<size_t>(out.width) * out.height * 3, 0);

  // Cell order: top-left, top-right, bottom-left, bottom-right.
  const int offsets[4][2] = {{0, 0}, {w, 0}, {0, h}, {w, h}};
  for (int c = 0; c < 4; ++c) {
    const imaging::Image scaled = imaging::resize(cells[static_cast<size_t>(c)], w, h);
    const int ox = offsets[c][0];
    const int oy = offsets[c][1];
    for (int y = 0; y < h; ++y) {
      std::copy_n(&scaled.pixels[scaled.index(0, y)], static_cast<size_t>(w) * 3,
                  &out.pixels[out.index(ox, oy + y)]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Communication Expert
// ---------------------------------------------------------------------------

std::string ExpertFinding::render() const {
  std::string out;
  if (!narrative.empty()) out += "Narrative: " + narrative + "\n";
  if (!strategy.empty()) out += "Persuasion strategy: " + strategy + "\n";
  if (!symbols.empty()) out += "Symbols: " + join(symbols, "; ") + "\n";
  out += "Answer: " + answer;
  return out;
}

json ExpertFinding::to_json() const {
  json j;
  j["narrative"] = narrative;
  j["strategy"] = strategy;
  j["symbols"] = symbols;
  j["answer"] = answer;
  j["degraded"] = degraded;
  return j;
}

ExpertFinding communication_expert(const VideoDatabase& db, const TimeRange& range,
                                   const std::string& focus, const GlobalContext& global,
                                   Backend& backend, const PromptLibrary& prompts,
                                   const ToolConfig& config) {
  const GridPlan plan = plan_grid_projection(range, db.frames, config.grid_samples);

  // Compose and cache the grids, keyed by range and plan hash.
  const fs::path cache_dir = db.root / "grids" /
                             (format_seconds(range.start) + "-" + format_seconds(range.end) +
                              "-" + to_hex(plan.content_hash()));
  std::vector<fs::path> grid_paths;
  for (size_t b = 0; b < plan.batches.size(); ++b) {
    const fs::path grid_path = cache_dir / ("batch" + std::to_string(b) + ".png");
    if (!fs::exists(grid_path)) {
      std::array<imaging::Image, 4> cells;
      for (size_t c = 0; c < 4; ++c)
        cells[c] = imaging::load_image(plan.batches[b][c].frame);
      imaging::save_image(compose_grid(cells), grid_path);
    }
    grid_paths.push_back(grid_path);
  }

  ChatRequest request;
  request.role = ModelRole::Expert;
  request.messages.push_back({ChatMessage::Kind::System, prompts.get("comm_expert")});
  std::string user = "FOCUS QUESTION: " + focus + "\nRange: " +
                     format_span(range.start, range.end) + "\n";
  if (!global.summary.empty()) user += "\nGLOBAL SUMMARY:\n" + global.render() + "\n";
  const std::string asr = db.transcript_slice(range);
  user += "\nALIGNED TRANSCRIPT:\n" + (asr.empty() ? "(none)" : asr);
  request.messages.push_back({ChatMessage::Kind::User, std::move(user)});
  for (const auto& path : grid_paths) request.images.push_back({path.string(), "high"});
  // Hard image budget: 16 composed grids, never more.
  if (request.images.size() > 16) request.images.resize(16);

  auto response = backend.chat(request);
  auto parsed = find_json_object(response.text);
  if (!parsed || !parsed->contains("answer")) {
    ChatRequest repair = request;
    repair.messages.push_back({ChatMessage::Kind::User,
                               "Your previous reply was not the required JSON template. Return "
                               "ONLY the JSON object."});
    response = backend.chat(repair);
    parsed = find_json_object(response.text);
  }

  ExpertFinding finding;
  if (!parsed || !parsed->contains("answer")) {
    finding.answer = trim(response.text);
    finding.degraded = true;
    return finding;
  }
  finding.narrative = trim(parsed->value("narrative", ""));
  finding.strategy = trim(parsed->value("strategy", ""));
  finding.answer = trim(parsed->value("answer", ""));
  if (parsed->contains("symbols")) {
    const json& symbols = parsed->at("symbols");
    if (symbols.is_array()) {
      for (const auto& s : symbols) {
        if (s.is_string()) {
          finding.symbols.push_back(s.get<std::string>());
        } else if (s.is_object()) {
          std::string line = s.value("symbol", "");
          if (s.contains("meaning")) line += " -> " + s.value("meaning", "");
          if (s.contains("grounding")) line += " (" + s.value("grounding", "") + ")";
          finding.symbols.push_back(line);
        }
      }
    }
  }
  return finding;
}

Observation communication_expert_observation(const VideoDatabase& db, const TimeRange& range,
                                             const std::string& focus,
                                             const GlobalContext& global, Backend& backend,
                                             const PromptLibrary& prompts,
                                             const ToolConfig& config) {
  const ExpertFinding finding = communication_expert(db, range, focus, global, backend, prompts,
                                                     config);
  Observation obs;
  obs.text = finding.render();
  obs.payload = finding.to_json();
  obs.payload["start"] = range.start;
  obs.payload["end"] = range.end;
  return obs;
}

}  // namespace admir::tools
