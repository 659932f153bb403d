#include <iostream>

#include <CLI11.hpp>

#include "admir/cli.hpp"

namespace {

void add_backend_flags(CLI::App* cmd, admir::cli::BackendOptions& options) {
  cmd->add_option("--backend", options.profile, "Backend profile: mock or http")
      ->default_val("mock");
  cmd->add_option("--mock-script", options.mock_script,
                  "Mock script file (required with --backend mock)");
  cmd->add_option("--http-config", options.http_config,
                  "JSON profile for the http backend (credentials via env)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"admir: two-stage advertising-video reasoning pipeline"};
  app.require_subcommand(1);

  std::string prompts_dir;
  app.add_option("--prompts", prompts_dir,
                 "Prompt template directory (default: ADMIR_PROMPTS_DIR or bundled assets)");

  // build-db
  admir::cli::BuildDbOptions build_options;
  auto* build = app.add_subcommand("build-db", "Build the structured video database");
  build->add_option("--frames", build_options.frames_dir, "Directory of extracted frames")
      ->required();
  build->add_option("--transcript", build_options.transcript_file,
                    "Timestamped transcript (transcript.jsonl)")
      ->required();
  build->add_option("--out", build_options.out_dir, "Output database directory")->required();
  build->add_option("--video-id", build_options.video_id, "Video id (default: out dir name)");
  build->add_option("--duration", build_options.duration,
                    "Video duration in seconds (default: inferred)");
  build->add_option("--clip-secs", build_options.ingest.clip_secs, "Clip length in seconds")
      ->default_val(5.0);
  build->add_option("--ocr-stride", build_options.ingest.ocr_stride,
                    "OCR every Nth frame (0 disables)")
      ->default_val(1);
  build->add_option("--jobs", build_options.ingest.jobs, "Captioning workers")->default_val(1);
  bool llm_merge = false;
  build->add_flag("--llm-merge", llm_merge, "Merge subject registries with the model");
  bool no_copy_frames = false;
  build->add_flag("--no-copy-frames", no_copy_frames,
                  "Reference the frames directory instead of copying it");
  add_backend_flags(build, build_options.backend);

  // ask
  admir::cli::AskOptions ask_options;
  auto* ask = app.add_subcommand("ask", "Answer a question against a built database");
  ask->add_option("--db", ask_options.db_dir, "Database directory")->required();
  ask->add_option("question", ask_options.question, "The question to answer")->required();
  ask->add_option("--out", ask_options.trace_out, "Trace output path (default: <db>/trace.jsonl)");
  ask->add_option("--t-max", ask_options.session.t_max, "Maximum reasoning steps")
      ->default_val(8);
  ask->add_option("--beta", ask_options.session.beta, "Lexical weight in hybrid scoring")
      ->default_val(1.0);
  ask->add_option("--top-k", ask_options.session.clip_search_top_k, "Clip search top-k")
      ->default_val(5);
  ask->add_option("--browse-top-k", ask_options.session.global_browse_top_k,
                  "Global browse top-k")
      ->default_val(40);
  ask->add_option("--subject-k", ask_options.session.subject_k, "Active subject count")
      ->default_val(3);
  add_backend_flags(ask, ask_options.backend);

  // eval
  admir::cli::EvalOptions eval_options;
  auto* evaluate = app.add_subcommand("eval", "Judge responses and aggregate accuracy");
  evaluate->add_option("--cases", eval_options.cases_file, "cases.jsonl file")->required();
  evaluate->add_option("--cache", eval_options.cache_dir, "Judge cache directory");
  evaluate->add_option("--out", eval_options.report_out, "Write report JSON here");
  add_backend_flags(evaluate, eval_options.backend);

  // trace
  admir::cli::TraceOptions trace_options;
  auto* trace = app.add_subcommand("trace", "Render a trace file");
  trace->add_option("file", trace_options.trace_file, "trace.jsonl path")->required();

  CLI11_PARSE(app, argc, argv);

  build_options.ingest.merge =
      llm_merge ? admir::ingest::MergeMode::Llm : admir::ingest::MergeMode::Deterministic;
  build_options.ingest.copy_frames = !no_copy_frames;
  build_options.prompts_dir = prompts_dir;
  ask_options.prompts_dir = prompts_dir;
  eval_options.prompts_dir = prompts_dir;

  try {
    if (build->parsed()) return admir::cli::cmd_build_db(build_options, std::cout, std::cerr);
    if (ask->parsed()) return admir::cli::cmd_ask(ask_options, std::cout, std::cerr);
    if (evaluate->parsed()) return admir::cli::cmd_eval(eval_options, std::cout, std::cerr);
    if (trace->parsed()) return admir::cli::cmd_trace(trace_options, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "fatal: " << e.what() << "\n";
    return admir::cli::kExitInput;
  }
  return admir::cli::kExitInput;
}
