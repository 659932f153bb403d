#pragma once

#include <iosfwd>
#include <memory>

#include "admir/agent.hpp"
#include "admir/backend.hpp"
#include "admir/ingest.hpp"

namespace admir::cli {

/// Exit codes (stable contract): 0 success, 2 input error, 3 session failure,
/// 4 evaluation verdict errors.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitSession = 3;
inline constexpr int kExitVerdicts = 4;

struct BackendOptions {
  std::string profile = "mock";  // "mock" | "http"
  std::string mock_script;       // required for the mock profile
  std::string http_config;       // optional JSON profile for the http backend
};

std::unique_ptr<backend::Backend> make_backend(const BackendOptions& options);

struct BuildDbOptions {
  std::string frames_dir;
  std::string transcript_file;
  std::string out_dir;
  std::string video_id;
  double duration = 0.0;  // 0 = infer from frames/transcript
  BackendOptions backend;
  std::string prompts_dir;
  ingest::IngestConfig ingest;
};

struct AskOptions {
  std::string db_dir;
  std::string question;
  std::string trace_out;  // default: <db>/trace.jsonl
  BackendOptions backend;
  std::string prompts_dir;
  agent::SessionConfig session;
};

struct EvalOptions {
  std::string cases_file;
  std::string cache_dir;   // empty = <cases dir>/.judge_cache
  std::string report_out;  // optional report.json path
  BackendOptions backend;
  std::string prompts_dir;
};

struct TraceOptions {
  std::string trace_file;
};

int cmd_build_db(const BuildDbOptions& options, std::ostream& out, std::ostream& err);
int cmd_ask(const AskOptions& options, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalOptions& options, std::ostream& out, std::ostream& err);
int cmd_trace(const TraceOptions& options, std::ostream& out, std::ostream& err);

}  // namespace admir::cli
