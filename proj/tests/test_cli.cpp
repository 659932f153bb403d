#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include "admir/cli.hpp"
#include "admir/evalkit.hpp"
#include "test_support.hpp"

using namespace admir;
using namespace admir::cli;

namespace {

const fs::path kData = ADMIR_TEST_DATA_DIR;

BackendOptions mock_backend(const std::string& script) {
  BackendOptions options;
  options.profile = "mock";
  options.mock_script = (kData / "mock" / script).string();
  return options;
}

int build_video1(const fs::path& out) {
  BuildDbOptions options;
  options.frames_dir = (kData / "corpus" / "video1" / "frames").string();
  options.transcript_file = (kData / "corpus" / "video1" / "transcript.jsonl").string();
  options.out_dir = out.string();
  options.video_id = "video1";
  options.backend = mock_backend("build_video1.json");
  std::ostringstream out_stream, err_stream;
  const int code = cmd_build_db(options, out_stream, err_stream);
  if (code != 0) MESSAGE(err_stream.str());
  return code;
}

}  // namespace

TEST_CASE("build-db: mocked build succeeds, populates the database dir, is idempotent") {
  testing::ScratchDir scratch("cli_build");
  const auto db_dir = scratch.path() / "db1";
  CHECK(build_video1(db_dir) == kExitOk);
  CHECK(fs::exists(db_dir / "meta.json"));
  CHECK(fs::exists(db_dir / "clips.jsonl"));
  CHECK(fs::exists(db_dir / "subjects.json"));
  CHECK(fs::exists(db_dir / "frames" / "0.ppm"));

  const auto db = VideoDatabase::load(db_dir);
  CHECK(db.meta.duration == 12.0);
  CHECK(db.clips.size() == 3);
  REQUIRE(db.subjects.size() == 1);
  CHECK(db.subjects[0].name == "man in red");

  // rerun: byte-identical database files (file-hash oracle)
  const auto clips_before = fnv1a64(read_file(db_dir / "clips.jsonl"));
  const auto subjects_before = fnv1a64(read_file(db_dir / "subjects.json"));
  CHECK(build_video1(db_dir) == kExitOk);
  CHECK(fnv1a64(read_file(db_dir / "clips.jsonl")) == clips_before);
  CHECK(fnv1a64(read_file(db_dir / "subjects.json")) == subjects_before);
}

TEST_CASE("build-db: missing transcript is an input error naming the file") {
  testing::ScratchDir scratch("cli_build_bad");
  BuildDbOptions options;
  options.frames_dir = (kData / "corpus" / "video1" / "frames").string();
  options.transcript_file = (scratch.path() / "nope.jsonl").string();
  options.out_dir = (scratch.path() / "db").string();
  options.backend = mock_backend("build_video1.json");
  std::ostringstream out, err;
  CHECK(cmd_build_db(options, out, err) == kExitInput);
  CHECK(err.str().find("nope.jsonl") != std::string::npos);
}

TEST_CASE("ask: scripted happy path prints a short answer and writes the trace") {
  testing::ScratchDir scratch("cli_ask");
  const auto db_dir = scratch.path() / "db1";
  REQUIRE(build_video1(db_dir) == kExitOk);

  AskOptions options;
  options.db_dir = db_dir.string();
  options.question = "What specific object does the man fix?";
  options.trace_out = (scratch.path() / "trace.jsonl").string();
  options.backend = mock_backend("ask_q1.json");
  std::ostringstream out, err;
  const int code = cmd_ask(options, out, err);
  INFO(err.str());
  CHECK(code == kExitOk);

  const auto lines = split(out.str(), '\n');
  REQUIRE(lines.size() >= 2);
  CHECK(lines[0] == "A man fixes a leaking sink.");
  CHECK(count_words(lines[0]) <= 25);
  CHECK(lines[1].find("trace.jsonl") != std::string::npos);

  const auto trace = agent::Trace::read(options.trace_out);
  CHECK(trace.footer.answer_verified);
  CHECK(trace.footer.steps == 1);
}

TEST_CASE("ask: never-finishing script exits 3 and still writes an 8-step trace") {
  testing::ScratchDir scratch("cli_ask_fail");
  const auto db_dir = scratch.path() / "db3";
  BuildDbOptions build;
  build.frames_dir = (kData / "corpus" / "video3" / "frames").string();
  build.transcript_file = (kData / "corpus" / "video3" / "transcript.jsonl").string();
  build.out_dir = db_dir.string();
  build.video_id = "video3";
  build.backend = mock_backend("build_video3.json");
  std::ostringstream bout, berr;
  REQUIRE(cmd_build_db(build, bout, berr) == kExitOk);

  AskOptions options;
  options.db_dir = db_dir.string();
  options.question = "Why does the narrator pause?";
  options.trace_out = (scratch.path() / "trace.jsonl").string();
  options.backend = mock_backend("ask_q4.json");
  std::ostringstream out, err;
  CHECK(cmd_ask(options, out, err) == kExitSession);
  const auto trace = agent::Trace::read(options.trace_out);
  CHECK(trace.footer.steps == 8);
  CHECK(trace.footer.status == "failure");
}

TEST_CASE("ask: malformed database is an input error") {
  testing::ScratchDir scratch("cli_ask_baddb");
  AskOptions options;
  options.db_dir = (scratch.path() / "not_a_db").string();
  options.question = "anything";
  options.backend = mock_backend("ask_q1.json");
  std::ostringstream out, err;
  CHECK(cmd_ask(options, out, err) == kExitInput);
}

TEST_CASE("eval: scripted cases, cached rerun needs no backend") {
  testing::ScratchDir scratch("cli_eval");
  EvalOptions options;
  options.cases_file = (kData / "cases.jsonl").string();
  options.cache_dir = (scratch.path() / "cache").string();
  options.report_out = (scratch.path() / "report.json").string();
  options.backend = mock_backend("judge.json");

  std::ostringstream out, err;
  CHECK(cmd_eval(options, out, err) == kExitOk);
  CHECK(out.str().find("VU") != std::string::npos);
  CHECK(out.str().find("overall") != std::string::npos);
  const std::string report1 = read_file(options.report_out);

  // warm cache: an empty-script backend would fail any judge call, so a clean
  // pass proves zero backend usage
  testing::ScratchDir empty_scratch("cli_eval_empty");
  const auto empty_script = empty_scratch.path() / "empty.json";
  write_file(empty_script, R"({"mode": "first_match", "rules": []})");
  options.backend.mock_script = empty_script.string();
  std::ostringstream out2, err2;
  CHECK(cmd_eval(options, out2, err2) == kExitOk);
  CHECK(read_file(options.report_out) == report1);
  CHECK(out2.str() == out.str());
}

TEST_CASE("eval: empty cases file is an input error; unparseable verdicts exit 4") {
  testing::ScratchDir scratch("cli_eval_bad");
  EvalOptions options;
  options.cases_file = (scratch.path() / "empty.jsonl").string();
  options.backend = mock_backend("judge.json");
  write_file(options.cases_file, "\n");
  std::ostringstream out, err;
  CHECK(cmd_eval(options, out, err) == kExitInput);

  // a judge that never answers in format -> exit 4, case listed
  const auto cases = scratch.path() / "cases.jsonl";
  write_file(cases,
             R"({"meta": "m", "question": "q", "golden": "g", "response": "r", "dimension": "VU"})"
             "\n");
  const auto bad_judge = scratch.path() / "bad_judge.json";
  write_file(bad_judge, R"({"mode": "first_match", "rules": [
    {"match": {"role": "judge"}, "response": {"text": "I refuse to grade."}}]})");
  EvalOptions bad;
  bad.cases_file = cases.string();
  bad.cache_dir = (scratch.path() / "cache2").string();
  bad.backend.profile = "mock";
  bad.backend.mock_script = bad_judge.string();
  std::ostringstream out2, err2;
  CHECK(cmd_eval(bad, out2, err2) == kExitVerdicts);
  CHECK(err2.str().find("unparseable verdict") != std::string::npos);
}

TEST_CASE("trace: renders a written trace; malformed file is an input error") {
  testing::ScratchDir scratch("cli_trace");
  const auto db_dir = scratch.path() / "db1";
  REQUIRE(build_video1(db_dir) == kExitOk);

  AskOptions ask;
  ask.db_dir = db_dir.string();
  ask.question = "What specific object does the man fix?";
  ask.trace_out = (scratch.path() / "trace.jsonl").string();
  ask.backend = mock_backend("ask_q1.json");
  std::ostringstream aout, aerr;
  REQUIRE(cmd_ask(ask, aout, aerr) == kExitOk);

  TraceOptions options;
  options.trace_file = ask.trace_out;
  std::ostringstream out, err;
  CHECK(cmd_trace(options, out, err) == kExitOk);
  CHECK(out.str().find("Step 0") != std::string::npos);
  CHECK(out.str().find("[pre-loop]") != std::string::npos);
  // footer totals match the rendered step count
  CHECK(out.str().find("Steps: 1") != std::string::npos);

  write_file(scratch.path() / "garbage.jsonl", "not a trace\n");
  TraceOptions bad;
  bad.trace_file = (scratch.path() / "garbage.jsonl").string();
  std::ostringstream out2, err2;
  CHECK(cmd_trace(bad, out2, err2) == kExitInput);
}

TEST_CASE("backend factory validates profiles") {
  BackendOptions options;
  options.profile = "mock";
  CHECK_THROWS_AS(make_backend(options), InputError);  // no script
  options.profile = "warp-drive";
  CHECK_THROWS_AS(make_backend(options), InputError);
  options = mock_backend("judge.json");
  CHECK(make_backend(options) != nullptr);
}

TEST_CASE("cli binary: subprocess smoke test") {
  testing::ScratchDir scratch("cli_bin");
  const std::string binary = ADMIR_CLI_PATH;
  REQUIRE(fs::exists(binary));

  const auto run = [&](const std::string& args) {
    const std::string cmd = binary + " " + args + " >" + (scratch.path() / "out.txt").string() +
                            " 2>" + (scratch.path() / "err.txt").string();
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
  };

  CHECK(run("--help") == 0);
  CHECK(run("trace " + (scratch.path() / "missing.jsonl").string()) == kExitInput);

  const auto db_dir = scratch.path() / "db";
  const int build_code = run(
      "build-db --frames " + (kData / "corpus" / "video1" / "frames").string() +
      " --transcript " + (kData / "corpus" / "video1" / "transcript.jsonl").string() +
      " --out " + db_dir.string() + " --video-id video1 --backend mock --mock-script " +
      (kData / "mock" / "build_video1.json").string());
  CHECK(build_code == 0);
  CHECK(fs::exists(db_dir / "clips.jsonl"));

  const int ask_code = run("ask --db " + db_dir.string() +
                           " \"What specific object does the man fix?\" --backend mock "
                           "--mock-script " +
                           (kData / "mock" / "ask_q1.json").string());
  CHECK(ask_code == 0);
  CHECK(read_file(scratch.path() / "out.txt").find("A man fixes a leaking sink.") !=
        std::string::npos);
}
