#include "admir/evalkit.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace admir::eval {

using backend::Backend;
using backend::ChatRequest;
using backend::ModelRole;
using nlohmann::json;

const std::vector<std::string>& dimensions() {
  static const std::vector<std::string> labels = {"VU", "ER", "TE", "PS", "AM"};
  return labels;
}

bool is_valid_dimension(const std::string& label) {
  const auto& d = dimensions();
  return std::find(d.begin(), d.end(), label) != d.end();
}

void JudgeCase::validate() const {
  if (trim(meta).empty() || trim(question).empty() || trim(golden).empty() ||
      trim(response).empty())
    throw InputError("judge case has empty fields (meta/question/golden/response required)");
  if (!is_valid_dimension(dimension))
    throw InputError("unknown dimension '" + dimension + "' (expected one of " +
                     join(dimensions(), "/") + ")");
}

std::string JudgeCase::cache_key() const {
  const std::string blob =
      meta + "\x1f" + question + "\x1f" + golden + "\x1f" + response + "\x1f" + dimension;
  return to_hex(fnv1a64(blob));
}

std::optional<double> parse_verdict_line(const std::string& reply) {
  // Last "Answer:" line wins.
  std::optional<double> value;
  for (const auto& raw : split(reply, '\n')) {
    const std::string line = trim(raw);
    const std::string lower = to_lower(line);
    if (lower.rfind("answer:", 0) != 0) continue;
    const std::string verdict = trim(line.substr(7));
    if (verdict == "0" || verdict == "0.0")
      value = 0.0;
    else if (verdict == "0.5" || verdict == ".5")
      value = 0.5;
    else if (verdict == "1" || verdict == "1.0")
      value = 1.0;
    else
      value = std::nullopt;
  }
  return value;
}

Score judge(const JudgeCase& judge_case, Backend& backend, const PromptLibrary& prompts) {
  judge_case.validate();

  const std::string prompt = prompts.render("judge", {{"meta_info", judge_case.meta},
                                                      {"question", judge_case.question},
                                                      {"golden_answer", judge_case.golden},
                                                      {"response", judge_case.response}});
  auto request = ChatRequest::simple(ModelRole::Judge, "", prompt);
  auto response = backend.chat(request);
  auto value = parse_verdict_line(response.text);
  if (!value) {
    request.messages.push_back(
        {backend::ChatMessage::Kind::User,
         "Follow the format exactly and output nothing else:\nAnswer: 0 / 0.5 / 1"});
    response = backend.chat(request);
    value = parse_verdict_line(response.text);
    if (!value)
      throw UnparseableVerdict("judge verdict unparseable after re-prompt: \"" +
                               trim(response.text).substr(0, 80) + "\"");
  }
  return {*value, response.text};
}

Report aggregate(const std::vector<std::pair<std::string, Score>>& scores) {
  if (scores.empty()) throw InputError("aggregate: no scores");

  Report report;
  for (const auto& [dimension, score] : scores) {
    DimensionStats& stats = report.by_dimension[dimension];
    ++stats.cases;
    ++report.overall.cases;
    if (score.value == 1.0) {
      ++stats.strict_hits;
      ++report.overall.strict_hits;
    }
    if (score.value >= 0.5) {
      ++stats.relaxed_hits;
      ++report.overall.relaxed_hits;
    }
  }
  for (const auto& [dimension, stats] : report.by_dimension) {
    report.macro_strict += stats.strict();
    report.macro_relaxed += stats.relaxed();
  }
  report.macro_strict /= static_cast<double>(report.by_dimension.size());
  report.macro_relaxed /= static_cast<double>(report.by_dimension.size());
  return report;
}

json Report::to_json() const {
  json j;
  j["dimensions"] = json::object();
  for (const auto& [dimension, stats] : by_dimension) {
    j["dimensions"][dimension] = {{"cases", stats.cases},
                                  {"strict", stats.strict()},
                                  {"relaxed", stats.relaxed()}};
  }
  j["overall"] = {{"cases", overall.cases},
                  {"strict", overall.strict()},
                  {"relaxed", overall.relaxed()}};
  j["macro"] = {{"strict", macro_strict}, {"relaxed", macro_relaxed}};
  return j;
}

std::string Report::to_table() const {
  std::ostringstream out;
  out << "dimension  cases  strict  relaxed\n";
  auto row = [&](const std::string& label, const DimensionStats& stats) {
    char line[128];
    std::snprintf(line, sizeof(line), "%-9s  %5d  %6.3f  %7.3f\n", label.c_str(), stats.cases,
                  stats.strict(), stats.relaxed());
    out << line;
  };
  for (const auto& [dimension, stats] : by_dimension) row(dimension, stats);
  row("overall", overall);
  char macro_line[128];
  std::snprintf(macro_line, sizeof(macro_line), "%-9s  %5s  %6.3f  %7.3f\n", "macro", "-",
                macro_strict, macro_relaxed);
  out << macro_line;
  return out.str();
}

std::vector<JudgeCase> load_cases(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read cases file: " + path.string());
  std::vector<JudgeCase> cases;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": invalid JSON record");
    JudgeCase judge_case;
    judge_case.meta = j.value("meta", "");
    judge_case.question = j.value("question", "");
    judge_case.golden = j.value("golden", "");
    judge_case.response = j.value("response", "");
    judge_case.dimension = j.value("dimension", "");
    judge_case.validate();
    cases.push_back(std::move(judge_case));
  }
  if (cases.empty()) throw InputError("cases file is empty: " + path.string());
  return cases;
}

std::optional<Score> JudgeCache::lookup(const JudgeCase& judge_case) const {
  const fs::path file = dir_ / (judge_case.cache_key() + ".json");
  if (!fs::exists(file)) return std::nullopt;
  json j = json::parse(read_file(file), nullptr, false);
  if (j.is_discarded() || !j.contains("value")) return std::nullopt;
  return Score{j.at("value").get<double>(), j.value("raw", "")};
}

void JudgeCache::store(const JudgeCase& judge_case, const Score& score) const {
  json j;
  j["value"] = score.value;
  j["raw"] = score.raw;
  write_file(dir_ / (judge_case.cache_key() + ".json"), j.dump(2) + "\n");
}

}  // namespace admir::eval
