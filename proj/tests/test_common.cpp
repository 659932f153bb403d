#include <doctest.h>

#include <random>

#include "admir/common.hpp"

using namespace admir;

TEST_CASE("trim, lower, split") {
  CHECK(trim("  a b  ") == "a b");
  CHECK(trim("") == "");
  CHECK(to_lower("NiKe 50% OFF") == "nike 50% off");
  CHECK(split("a,b,,c", ',') == std::vector<std::string>{"a", "b", "", "c"});
  CHECK(split_whitespace("  a\t b\nc ") == std::vector<std::string>{"a", "b", "c"});
  CHECK(count_words("one two  three") == 3);
  CHECK(truncate_words("a b c d", 2) == "a b");
  CHECK(truncate_words("a b", 5) == "a b");
}

TEST_CASE("render_template replaces known keys only") {
  const std::string tpl = "Q: {question} J: {\"answer\": 1} again {question}";
  const auto out = render_template(tpl, {{"question", "why?"}});
  CHECK(out == "Q: why? J: {\"answer\": 1} again why?");
}

TEST_CASE("base64 round trip") {
  std::mt19937_64 rng(7);
  for (int len = 0; len < 40; ++len) {
    std::vector<uint8_t> data(static_cast<size_t>(len));
    for (auto& b : data) b = static_cast<uint8_t>(rng());
    const std::string encoded = base64_encode(data.data(), data.size());
    CHECK(base64_decode(encoded) == data);
  }
}

TEST_CASE("embedding encode/decode is exact") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<float> dist(-2.f, 2.f);
  std::vector<float> v(257);
  for (auto& x : v) x = dist(rng);
  CHECK(decode_embedding(encode_embedding(v)) == v);
}

TEST_CASE("vector math") {
  std::vector<float> a = {3, 4};
  CHECK(l2_norm(a) == doctest::Approx(5.0));
  l2_normalize(a);
  CHECK(l2_norm(a) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(cosine(a, a) == doctest::Approx(1.0).epsilon(1e-9));
  std::vector<float> zero(3, 0.f);
  CHECK_THROWS_AS(l2_normalize(zero), Error);
}

TEST_CASE("interval intersection") {
  CHECK(intersection_length({10, 20}, {12, 22}) == doctest::Approx(8.0));
  CHECK(intersection_length({0, 5}, {5, 10}) == 0.0);
  CHECK(intersection_length({0, 5}, {7, 9}) == 0.0);
}

#include "admir/prompts.hpp"

TEST_CASE("prompt library loads every template and renders placeholders") {
  const auto lib = admir::PromptLibrary::load(ADMIR_PROMPTS_DIR);
  for (const auto& name : admir::PromptLibrary::required_templates())
    CHECK_FALSE(lib.get(name).empty());

  const auto rendered = lib.render("query_rewrite", {{"original_query", "sad man"}});
  CHECK(rendered.find("'sad man'") != std::string::npos);
  CHECK(rendered.find("{original_query}") == std::string::npos);

  CHECK_THROWS_AS(lib.get("nonexistent"), admir::Error);
  CHECK_THROWS_AS(admir::PromptLibrary::load("/nonexistent/dir"), admir::InputError);
}

TEST_CASE("templates carry the constants the pipeline parses against") {
  const auto lib = admir::PromptLibrary::load(ADMIR_PROMPTS_DIR);
  // sentinels and fields consumed by parsers; editing them breaks the build
  CHECK(lib.get("ocr").find("NO_TEXT") != std::string::npos);
  CHECK(lib.get("captioning").find("clip_description") != std::string::npos);
  CHECK(lib.get("captioning").find("subject_registry") != std::string::npos);
  CHECK(lib.get("captioning").find("first_seen") != std::string::npos);
  CHECK(lib.get("registry_merge").find("{registries}") != std::string::npos);
  CHECK(lib.get("registry_merge").find("first_seen") != std::string::npos);
  CHECK(lib.get("global_browse").find("narrative_reconstruction") != std::string::npos);
  CHECK(lib.get("global_browse").find("[POTENTIAL_TEXT]") != std::string::npos);
  CHECK(lib.get("comm_expert").find("Top-Left -> Top-Right -> Bottom-Left -> Bottom-Right") !=
        std::string::npos);
  CHECK(lib.get("controller_system").find("YOU MUST ACCEPT IT AS FACT") != std::string::npos);
  CHECK(lib.get("query_rewrite").find("3 simple, comma-separated keywords") != std::string::npos);
  CHECK(lib.get("refine").find("{answer}") != std::string::npos);
  CHECK(lib.get("refine").find("{limit}") != std::string::npos);
  CHECK(lib.get("anchor_repair").find("{anchors}") != std::string::npos);
  CHECK(lib.get("judge").find("Answer: 0 / 0.5 / 1") != std::string::npos);
  CHECK(lib.get("judge").find("{golden_answer}") != std::string::npos);
  CHECK(lib.get("verify_claims").find("SUPPORTED") != std::string::npos);
}
