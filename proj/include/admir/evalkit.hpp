#pragma once

#include <map>
#include <optional>

#include "admir/backend.hpp"
#include "admir/prompts.hpp"

namespace admir::eval {

/// Judge reply did not contain a rubric verdict, even after the re-prompt.
class UnparseableVerdict : public Error {
 public:
  using Error::Error;
};

/// Dimensions: VU (visual understanding), ER (emotion), TE (theme),
/// PS (persuasion strategy), AM (audience modeling).
const std::vector<std::string>& dimensions();
bool is_valid_dimension(const std::string& label);

struct JudgeCase {
  std::string meta;
  std::string question;
  std::string golden;
  std::string response;
  std::string dimension;

  void validate() const;
  /// Content hash used as the cache key.
  std::string cache_key() const;
};

struct Score {
  double value = 0.0;  // 0, 0.5 or 1.0
  std::string raw;     // verbatim judge reply
};

/// Parses the final "Answer: 0 / 0.5 / 1" line of a judge reply.
std::optional<double> parse_verdict_line(const std::string& reply);

/// Fills the judge template and parses the verdict; one re-prompt before
/// giving up with UnparseableVerdict.
Score judge(const JudgeCase& judge_case, backend::Backend& backend,
            const PromptLibrary& prompts);

struct DimensionStats {
  int cases = 0;
  int strict_hits = 0;   // score == 1.0
  int relaxed_hits = 0;  // score >= 0.5

  double strict() const { return cases ? static_cast<double>(strict_hits) / cases : 0.0; }
  double relaxed() const { return cases ? static_cast<double>(relaxed_hits) / cases : 0.0; }
};

struct Report {
  std::map<std::string, DimensionStats> by_dimension;
  DimensionStats overall;           // micro average over cases (headline)
  double macro_strict = 0.0;        // mean of per-dimension strict accuracies
  double macro_relaxed = 0.0;

  nlohmann::json to_json() const;
  std::string to_table() const;
};

/// Strict = fraction of scores equal to 1.0, relaxed = fraction >= 0.5, per
/// dimension and overall.
Report aggregate(const std::vector<std::pair<std::string, Score>>& scores);

/// cases.jsonl: one {meta, question, golden, response, dimension} per line.
std::vector<JudgeCase> load_cases(const fs::path& path);

/// Content-hash keyed score cache; a warm cache makes re-evaluation
/// model-free.
class JudgeCache {
 public:
  explicit JudgeCache(fs::path dir) : dir_(std::move(dir)) {}

  std::optional<Score> lookup(const JudgeCase& judge_case) const;
  void store(const JudgeCase& judge_case, const Score& score) const;

 private:
  fs::path dir_;
};

}  // namespace admir::eval
