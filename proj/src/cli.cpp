#include "admir/cli.hpp"

#include <cmath>
#include <ostream>

#include "admir/evalkit.hpp"
#include "admir/http_backend.hpp"
#include "admir/mock_backend.hpp"

namespace admir::cli {

using backend::Backend;

std::unique_ptr<Backend> make_backend(const BackendOptions& options) {
  if (options.profile == "mock") {
    if (options.mock_script.empty())
      throw InputError("mock backend profile needs --mock-script <file>");
    return std::make_unique<backend::MockBackend>(
        backend::MockBackend::from_file(options.mock_script));
  }
  if (options.profile == "http") {
    auto config = options.http_config.empty()
                      ? backend::HttpBackendConfig::from_env()
                      : backend::HttpBackendConfig::from_file(options.http_config);
    return std::make_unique<backend::HttpBackend>(std::move(config));
  }
  throw InputError("unknown backend profile '" + options.profile + "' (use mock or http)");
}

namespace {

PromptLibrary load_prompts(const std::string& dir) {
  return PromptLibrary::load(PromptLibrary::resolve_dir(dir));
}

}  // namespace

int cmd_build_db(const BuildDbOptions& options, std::ostream& out, std::ostream& err) {
  try {
    if (!fs::is_directory(options.frames_dir)) {
      err << "error: frames directory not found: " << options.frames_dir << "\n";
      return kExitInput;
    }
    if (!fs::exists(options.transcript_file)) {
      err << "error: transcript file not found: " << options.transcript_file << "\n";
      return kExitInput;
    }

    const auto prompts = load_prompts(options.prompts_dir);
    auto backend = make_backend(options.backend);
    auto transcript = ingest::load_transcript(options.transcript_file);

    VideoMeta meta;
    meta.video_id = options.video_id.empty()
                        ? fs::path(options.out_dir).filename().string()
                        : options.video_id;
    meta.fps = 1.0;
    meta.duration = options.duration;
    if (meta.duration <= 0) {
      // Infer: last frame + one frame interval, or the transcript tail.
      const auto frames = FrameIndex::scan(options.frames_dir);
      double inferred = 0.0;
      if (!frames.empty()) inferred = frames.entries().back().timestamp + 1.0 / meta.fps;
      for (const auto& u : transcript) inferred = std::max(inferred, u.end);
      meta.duration = inferred;
    }

    const auto db = ingest::build_database(meta, options.frames_dir, std::move(transcript),
                                           *backend, prompts, options.ingest, options.out_dir);
    out << "database written to " << options.out_dir << "\n";
    out << "clips: " << db.clips.size() << ", subjects: " << db.subjects.size()
        << ", frames: " << db.frames.size() << ", utterances: " << db.transcript.size() << "\n";
    return kExitOk;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
}

int cmd_ask(const AskOptions& options, std::ostream& out, std::ostream& err) {
  VideoDatabase db;
  try {
    db = VideoDatabase::load(options.db_dir);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }

  try {
    const auto prompts = load_prompts(options.prompts_dir);
    auto backend = make_backend(options.backend);

    const auto result =
        agent::run_session(db, options.question, *backend, prompts, options.session);

    const fs::path trace_path = options.trace_out.empty()
                                    ? fs::path(options.db_dir) / "trace.jsonl"
                                    : fs::path(options.trace_out);
    result.trace.write(trace_path);

    if (result.verified()) {
      out << result.answer << "\n";
      out << "trace: " << trace_path.string() << "\n";
      return kExitOk;
    }
    out << "(unverified draft) " << result.answer << "\n";
    out << "trace: " << trace_path.string() << "\n";
    if (!result.trace.footer.error.empty())
      err << "session error: " << result.trace.footer.error << "\n";
    else
      err << "session failed: no verified answer within " << options.session.t_max << " steps\n";
    return kExitSession;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitSession;
  }
}

int cmd_eval(const EvalOptions& options, std::ostream& out, std::ostream& err) {
  std::vector<eval::JudgeCase> cases;
  try {
    cases = eval::load_cases(options.cases_file);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }

  try {
    const auto prompts = load_prompts(options.prompts_dir);
    auto backend = make_backend(options.backend);

    const fs::path cache_dir = options.cache_dir.empty()
                                   ? fs::path(options.cases_file).parent_path() / ".judge_cache"
                                   : fs::path(options.cache_dir);
    const eval::JudgeCache cache(cache_dir);

    std::vector<std::pair<std::string, eval::Score>> scores;
    std::vector<std::string> unparseable;
    for (size_t i = 0; i < cases.size(); ++i) {
      const auto& judge_case = cases[i];
      if (auto cached = cache.lookup(judge_case)) {
        scores.emplace_back(judge_case.dimension, *cached);
        continue;
      }
      try {
        const auto score = eval::judge(judge_case, *backend, prompts);
        cache.store(judge_case, score);
        scores.emplace_back(judge_case.dimension, score);
      } catch (const eval::UnparseableVerdict& e) {
        unparseable.push_back("case " + std::to_string(i + 1) + ": " + e.what());
      }
    }

    if (!scores.empty()) {
      const auto report = eval::aggregate(scores);
      out << report.to_table();
      if (!options.report_out.empty())
        write_file(options.report_out, report.to_json().dump(2) + "\n");
    }
    if (!unparseable.empty()) {
      for (const auto& entry : unparseable) err << "unparseable verdict: " << entry << "\n";
      return kExitVerdicts;
    }
    return kExitOk;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
}

int cmd_trace(const TraceOptions& options, std::ostream& out, std::ostream& err) {
  try {
    const auto trace = agent::Trace::read(options.trace_file);
    out << trace.render_text();
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
}

}  // namespace admir::cli
