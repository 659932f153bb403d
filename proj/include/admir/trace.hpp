#pragma once

#include "admir/actions.hpp"

namespace admir::agent {

/// One Think-Act-Observe step. Step -1 is the pre-loop global browse; loop
/// steps count from 0. wall_ms stays 0 unless timing is enabled, keeping
/// trace files byte-stable across reruns.
struct StepRecord {
  int step = 0;
  std::string thought;
  Action action;
  Observation observation;
  double wall_ms = 0.0;
};

struct TraceFooter {
  std::string status;  // "verified" | "failure"
  std::string answer;
  bool answer_verified = false;
  std::string error;  // backend failure that ended the session, if any
  nlohmann::json verdicts = nlohmann::json::array();
  int64_t chat_calls = 0;
  int64_t embed_calls = 0;
  int steps = 0;
};

/// Line-delimited session record: one header line, one line per step, one
/// footer line.
struct Trace {
  std::string query;
  nlohmann::json config = nlohmann::json::object();
  std::vector<StepRecord> steps;
  TraceFooter footer;

  std::string to_jsonl() const;
  void write(const fs::path& path) const;
  static Trace parse(const std::string& jsonl);
  static Trace read(const fs::path& path);

  /// Human-readable rendering used by the trace CLI command.
  std::string render_text() const;
};

nlohmann::json step_to_json(const StepRecord& step);
StepRecord step_from_json(const nlohmann::json& j);

}  // namespace admir::agent
