#include <doctest.h>

#include <random>
#include <set>

#include "admir/mock_backend.hpp"
#include "admir/tools.hpp"
#include "test_support.hpp"

using namespace admir;
using namespace admir::tools;
using agent::InspectMode;
using backend::ChatRequest;
using backend::MockBackend;
using backend::ModelRole;

namespace {

PromptLibrary prompts() { return PromptLibrary::load(ADMIR_PROMPTS_DIR); }

VideoDatabase tiny_db(const fs::path& root, int frame_count, double duration) {
  VideoDatabase db;
  db.root = root;
  db.meta.video_id = "t";
  db.meta.duration = duration;
  const fs::path frame_dir = root / "frames";
  for (int t = 0; t < frame_count; ++t)
    imaging::save_image(imaging::Image::solid(6, 4, uint8_t(t), 100, 50),
                        frame_dir / (std::to_string(t) + ".ppm"));
  db.frames = FrameIndex::scan(frame_dir);
  return db;
}

}  // namespace

// ---------------------------------------------------------------------------
// global_browse
// ---------------------------------------------------------------------------

TEST_CASE("global_browse: chronological captions, parsed template") {
  testing::ScratchDir scratch("browse");
  auto db = tiny_db(scratch.path(), 0, 15);
  for (int i = 0; i < 3; ++i) {
    ClipRecord clip;
    clip.index = i;
    clip.start = i * 5.0;
    clip.end = (i + 1) * 5.0;
    clip.caption = "caption number " + std::to_string(i);
    // reverse-rank embeddings: clip 2 scores highest against the query
    clip.embedding = testing::FnBackend::unit_vector("e" + std::to_string(2 - i), 8);
    db.clips.push_back(clip);
  }
  db.clips[1].ocr_lines = {"BIG SALE"};
  db.transcript = {{0, 2, "hello there"}, {12, 14, "buy now"}};

  std::string seen_prompt;
  testing::FnBackend capture([&](const ChatRequest& request) {
    seen_prompt = request.combined_content();
    backend::ChatResponse response;
    response.text = R"({"narrative_reconstruction": "A three-act ad.",
                        "genre": "direct promotion",
                        "inferred_objects": ["sneakers"],
                        "explicit_text_found": ["BIG SALE"],
                        "audio_visual_mismatch": "",
                        "final_answer": "sneakers"})";
    return response;
  });
  capture.set_embed([](const std::vector<std::string>& texts) {
    std::vector<backend::Embedding> out;
    for (size_t i = 0; i < texts.size(); ++i)
      out.push_back(testing::FnBackend::unit_vector("e2", 8));
    return out;
  });

  const auto lib = prompts();
  const auto global = global_browse(db, "what product?", capture, lib, 40);

  CHECK(global.summary == "A three-act ad.");
  CHECK(global.genre == "direct promotion");
  CHECK(global.entities == std::vector<std::string>{"sneakers"});
  CHECK(global.explicit_text == std::vector<std::string>{"BIG SALE"});
  CHECK(global.answer == "sneakers");
  CHECK_FALSE(global.degraded);

  // all three captions present, in chronological order despite reversed ranks
  const auto p0 = seen_prompt.find("caption number 0");
  const auto p1 = seen_prompt.find("caption number 1");
  const auto p2 = seen_prompt.find("caption number 2");
  REQUIRE(p0 != std::string::npos);
  REQUIRE(p1 != std::string::npos);
  REQUIRE(p2 != std::string::npos);
  CHECK(p0 < p1);
  CHECK(p1 < p2);
  CHECK(seen_prompt.find("[POTENTIAL_TEXT]: BIG SALE") != std::string::npos);
  CHECK(seen_prompt.find("hello there buy now") != std::string::npos);
}

TEST_CASE("global_browse degrades to raw text after a failed repair") {
  testing::ScratchDir scratch("browse_degraded");
  auto db = tiny_db(scratch.path(), 0, 5);
  ClipRecord clip;
  clip.index = 0;
  clip.start = 0;
  clip.end = 5;
  clip.caption = "only clip";
  clip.embedding = testing::FnBackend::unit_vector("x", 8);
  db.clips.push_back(clip);

  int calls = 0;
  testing::FnBackend prose([&](const ChatRequest&) {
    ++calls;
    return backend::ChatResponse{"freeform summary text", "stop", std::nullopt};
  });
  const auto global = global_browse(db, "q", prose, prompts(), 40);
  CHECK(calls == 2);  // original + one repair
  CHECK(global.degraded);
  CHECK(global.summary == "freeform summary text");
}

// ---------------------------------------------------------------------------
// clip_search_tool
// ---------------------------------------------------------------------------

TEST_CASE("clip_search_tool composes rewrite, search and fusion") {
  testing::ScratchDir scratch("cst");
  auto db = tiny_db(scratch.path(), 0, 15);
  for (int i = 0; i < 3; ++i) {
    ClipRecord clip;
    clip.index = i;
    clip.start = i * 5.0;
    clip.end = (i + 1) * 5.0;
    clip.caption = i == 1 ? "a red car speeds past" : "something else";
    clip.embedding = testing::FnBackend::unit_vector("c" + std::to_string(i), 8);
    db.clips.push_back(clip);
  }

  MockBackend mock(MockBackend::Mode::FirstMatch, 8);
  mock.set_embedding_fallback(MockBackend::EmbeddingFallback::Hashed);
  mock.add_text_rule(ModelRole::Controller, "Rewrite", "red car, vehicle, speeding");

  const auto lib = prompts();
  const auto obs = clip_search_tool(db, "fast red car", mock, lib, {});

  CHECK(obs.payload["keywords"] ==
        nlohmann::json::array({"red car", "vehicle", "speeding"}));
  CHECK(obs.payload["blocks"].is_array());
  CHECK(obs.text.find("Event block") != std::string::npos);
  CHECK(obs.text.find("a red car speeds past") != std::string::npos);
  // spans rendered as "start-end s"
  CHECK(obs.text.find("-") != std::string::npos);
  CHECK(obs.text.find(" s") != std::string::npos);

  // equality with calling the three retrieval ops manually
  auto mock2 = MockBackend(MockBackend::Mode::FirstMatch, 8);
  mock2.set_embedding_fallback(MockBackend::EmbeddingFallback::Hashed);
  const auto keywords = std::vector<std::string>{"red car", "vehicle", "speeding"};
  const auto query = retrieval::make_query("fast red car", keywords, mock2, 1.0);
  const auto ranked = retrieval::search_clips(db, query, 3);
  const auto blocks = retrieval::temporal_fusion(ranked, db, 3.0, 0.8);
  REQUIRE(obs.payload["blocks"].size() == blocks.size());
  for (size_t i = 0; i < blocks.size(); ++i) {
    CHECK(obs.payload["blocks"][i]["start"] == blocks[i].start);
    CHECK(obs.payload["blocks"][i]["end"] == blocks[i].end);
  }

  // rewrite fallback still yields blocks
  MockBackend no_rewrite(MockBackend::Mode::FirstMatch, 8);
  no_rewrite.set_embedding_fallback(MockBackend::EmbeddingFallback::Hashed);
  const auto fallback_obs = clip_search_tool(db, "fast red car", no_rewrite, lib, {});
  CHECK(fallback_obs.payload["blocks"].size() >= 1);
}

// ---------------------------------------------------------------------------
// frame_inspect
// ---------------------------------------------------------------------------

TEST_CASE("frame_inspect densities: literal dense, semantic sparse") {
  testing::ScratchDir scratch("inspect");
  auto db = tiny_db(scratch.path(), 20, 20);

  size_t images_attached = 0;
  std::string detail;
  testing::FnBackend capture([&](const ChatRequest& request) {
    images_attached = request.images.size();
    detail = request.images.empty() ? "" : request.images.front().detail;
    return backend::ChatResponse{"I see things.", "stop", std::nullopt};
  });
  const auto lib = prompts();

  auto obs = frame_inspect(db, {0, 10}, InspectMode::Literal, "what text?", capture, lib, {});
  CHECK(images_attached == 10);  // 1 FPS dense
  CHECK(detail == "high");
  CHECK(obs.payload["frames_attached"] == 10);
  CHECK(obs.payload["mode"] == "literal");

  obs = frame_inspect(db, {0, 10}, InspectMode::Semantic, "mood?", capture, lib, {});
  CHECK(images_attached == 2);  // one keyframe per 5 s
  CHECK(obs.payload["mode"] == "semantic");

  // sub-second range: nearest single frame in both modes
  obs = frame_inspect(db, {3.2, 3.9}, InspectMode::Literal, "q", capture, lib, {});
  CHECK(images_attached == 1);
  obs = frame_inspect(db, {3.2, 3.9}, InspectMode::Semantic, "q", capture, lib, {});
  CHECK(images_attached == 1);

  // literal cap: a huge range thins uniformly to the cap
  ToolConfig config;
  config.literal_frame_cap = 8;
  obs = frame_inspect(db, {0, 20}, InspectMode::Literal, "q", capture, lib, config);
  CHECK(images_attached == 8);

  CHECK_THROWS_AS(frame_inspect(db, {5, 5}, InspectMode::Literal, "q", capture, lib, {}),
                  std::invalid_argument);

  VideoDatabase frameless;
  frameless.meta.duration = 10;
  CHECK_THROWS_AS(frame_inspect(frameless, {0, 5}, InspectMode::Literal, "q", capture, lib, {}),
                  NoFramesInRange);
}

TEST_CASE("frame density contract: literal >= semantic for ranges >= 5 s") {
  testing::ScratchDir scratch("density");
  auto db = tiny_db(scratch.path(), 40, 40);
  size_t images_attached = 0;
  testing::FnBackend capture([&](const ChatRequest& request) {
    images_attached = request.images.size();
    return backend::ChatResponse{"ok", "stop", std::nullopt};
  });
  const auto lib = prompts();

  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> start_dist(0.0, 30.0);
  std::uniform_real_distribution<double> len_dist(5.0, 10.0);
  for (int trial = 0; trial < 25; ++trial) {
    const double start = start_dist(rng);
    const TimeRange range{start, start + len_dist(rng)};
    frame_inspect(db, range, InspectMode::Literal, "q", capture, lib, {});
    const size_t literal = images_attached;
    frame_inspect(db, range, InspectMode::Semantic, "q", capture, lib, {});
    const size_t semantic = images_attached;
    CHECK(literal >= semantic);
  }
}

// ---------------------------------------------------------------------------
// grid projection
// ---------------------------------------------------------------------------

TEST_CASE("grid plan: 64 frames over the range are each used once") {
  testing::ScratchDir scratch("grid64");
  auto db = tiny_db(scratch.path(), 64, 64);
  const auto plan = plan_grid_projection({0, 64}, db.frames, 64);
  REQUIRE(plan.batches.size() == 16);
  std::set<double> used;
  for (const auto& batch : plan.batches)
    for (const auto& cell : batch) used.insert(cell.timestamp);
  CHECK(used.size() == 64);
}

TEST_CASE("grid plan: scarce frames duplicate, order preserved") {
  testing::ScratchDir scratch("grid2");
  auto db = tiny_db(scratch.path(), 2, 10);
  const auto plan = plan_grid_projection({0, 10}, db.frames, 64);
  REQUIRE(plan.batches.size() == 16);
  double prev = -1;
  std::set<double> used;
  for (const auto& batch : plan.batches) {
    for (const auto& cell : batch) {
      CHECK(cell.timestamp >= prev);
      prev = cell.timestamp;
      used.insert(cell.timestamp);
    }
  }
  CHECK(used.size() == 2);
}

TEST_CASE("grid plan ordering oracle over random inputs") {
  std::mt19937_64 rng(67);
  std::uniform_int_distribution<int> frames_dist(1, 80);
  std::uniform_real_distribution<double> start_dist(0.0, 40.0);

  testing::ScratchDir scratch("gridrand");
  for (int trial = 0; trial < 20; ++trial) {
    const int frame_count = frames_dist(rng);
    const auto dir = scratch.path() / ("f" + std::to_string(trial));
    for (int t = 0; t < frame_count; ++t)
      imaging::save_image(imaging::Image::solid(2, 2, 0, 0, 0),
                          dir / (std::to_string(t) + ".ppm"));
    const auto index = FrameIndex::scan(dir);

    const double start = start_dist(rng);
    const double end = start + 1.0 + start_dist(rng);
    const auto plan = plan_grid_projection({start, end}, index, 64);

    REQUIRE(plan.batches.size() == 16);
    double prev = -1e18;
    for (size_t b = 0; b < plan.batches.size(); ++b) {
      // reading order TL -> TR -> BL -> BR nondecreasing, batches chain
      for (size_t c = 0; c < 4; ++c) {
        CHECK(plan.batches[b][c].timestamp >= prev);
        prev = plan.batches[b][c].timestamp;
      }
    }
  }

  CHECK_THROWS_AS(plan_grid_projection({0, 10}, FrameIndex{}, 64), NoFramesInRange);
  testing::ScratchDir s2("gridbad");
  imaging::save_image(imaging::Image::solid(2, 2, 0, 0, 0), s2.path() / "0.ppm");
  const auto one = FrameIndex::scan(s2.path());
  CHECK_THROWS_AS(plan_grid_projection({5, 5}, one, 64), std::invalid_argument);
  CHECK_THROWS_AS(plan_grid_projection({0, 10}, one, 13), std::invalid_argument);
}

TEST_CASE("compose_grid geometry and pixel placement") {
  using imaging::Image;

  // four 100x50 frames -> 200x100 composite
  std::array<Image, 4> cells = {Image::solid(100, 50, 255, 0, 0), Image::solid(100, 50, 0, 255, 0),
                                Image::solid(100, 50, 0, 0, 255), Image::solid(100, 50, 9, 9, 9)};
  const Image grid = compose_grid(cells);
  CHECK(grid.width == 200);
  CHECK(grid.height == 100);

  // each quadrant's mean equals its source color
  auto check_quadrant = [&](int x0, int y0, double r, double g, double b) {
    const auto mean = imaging::mean_color(grid, x0, y0, 100, 50);
    CHECK(mean.r == doctest::Approx(r).epsilon(1e-12));
    CHECK(mean.g == doctest::Approx(g).epsilon(1e-12));
    CHECK(mean.b == doctest::Approx(b).epsilon(1e-12));
  };
  check_quadrant(0, 0, 255, 0, 0);      // TL
  check_quadrant(100, 0, 0, 255, 0);    // TR
  check_quadrant(0, 50, 0, 0, 255);     // BL
  check_quadrant(100, 50, 9, 9, 9);     // BR

  // one frame repeated four times: identical quadrants
  Image tile = Image::solid(4, 4, 13, 77, 200);
  tile.pixels[tile.index(1, 2)] = 99;
  const Image same = compose_grid({tile, tile, tile, tile});
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) {
      const size_t src = tile.index(x, y);
      CHECK(same.pixels[same.index(x, y)] == tile.pixels[src]);
      CHECK(same.pixels[same.index(x + 4, y)] == tile.pixels[src]);
      CHECK(same.pixels[same.index(x, y + 4)] == tile.pixels[src]);
      CHECK(same.pixels[same.index(x + 4, y + 4)] == tile.pixels[src]);
    }

  // mismatched sizes scale to the first frame's size
  const Image mixed = compose_grid({Image::solid(10, 8, 1, 1, 1), Image::solid(3, 9, 2, 2, 2),
                                    Image::solid(10, 8, 3, 3, 3), Image::solid(20, 16, 4, 4, 4)});
  CHECK(mixed.width == 20);
  CHECK(mixed.height == 16);

  std::array<Image, 4> with_empty = {Image::solid(2, 2, 0, 0, 0), Image{}, Image::solid(2, 2, 0, 0, 0),
                                     Image::solid(2, 2, 0, 0, 0)};
  CHECK_THROWS_AS(compose_grid(with_empty), imaging::AssetError);
}

// ---------------------------------------------------------------------------
// communication_expert
// ---------------------------------------------------------------------------

TEST_CASE("communication_expert: 16 grids, range-limited transcript, parsed finding") {
  testing::ScratchDir scratch("expert");
  auto db = tiny_db(scratch.path(), 30, 30);
  db.transcript = {{2, 4, "inside the range"}, {25, 27, "outside the range"}};

  size_t images_attached = 0;
  std::string user_content;
  std::string detail;
  testing::FnBackend capture([&](const ChatRequest& request) {
    images_attached = request.images.size();
    user_content = request.combined_content();
    detail = request.images.empty() ? "" : request.images.front().detail;
    backend::ChatResponse response;
    response.text = R"({"narrative": "problem then product",
                        "strategy": "fear appeal",
                        "symbols": [{"symbol": "storm", "meaning": "risk", "grounding": "grid 3"}],
                        "answer": "the ad uses a fear appeal"})";
    return response;
  });

  const auto lib = prompts();
  GlobalContext global;
  global.summary = "an insurance ad";
  const auto finding = communication_expert(db, {0, 20}, "what strategy?", global, capture, lib, {});

  CHECK(images_attached == 16);
  CHECK(detail == "high");
  CHECK(finding.strategy == "fear appeal");
  CHECK(finding.answer == "the ad uses a fear appeal");
  CHECK(finding.symbols.size() == 1);
  CHECK_FALSE(finding.degraded);
  CHECK(user_content.find("inside the range") != std::string::npos);
  CHECK(user_content.find("outside the range") == std::string::npos);
  CHECK(user_content.find("an insurance ad") != std::string::npos);

  // grids cached under <db>/grids keyed by range and plan hash
  REQUIRE(fs::is_directory(db.root / "grids"));
  size_t cached = 0;
  for (const auto& dir : fs::directory_iterator(db.root / "grids"))
    for (const auto& file : fs::directory_iterator(dir.path())) {
      ++cached;
      const auto img = imaging::load_image(file.path());
      CHECK(img.width == 12);  // 2 x 6
      CHECK(img.height == 8);  // 2 x 4
    }
  CHECK(cached == 16);

  // scripted degraded path: prose twice -> raw answer, degraded flag
  testing::FnBackend prose([&](const ChatRequest&) {
    return backend::ChatResponse{"cannot give json", "stop", std::nullopt};
  });
  const auto degraded = communication_expert(db, {0, 20}, "f", global, prose, lib, {});
  CHECK(degraded.degraded);
  CHECK(degraded.answer == "cannot give json");
}
