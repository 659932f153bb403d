#include "admir/trace.hpp"

#include <sstream>

namespace admir::agent {

using nlohmann::json;

json step_to_json(const StepRecord& step) {
  json j;
  j["type"] = "step";
  j["t"] = step.step;
  j["thought"] = step.thought;
  j["action"] = action_to_json(step.action);
  j["observation"] = {{"text", step.observation.text}, {"payload", step.observation.payload}};
  j["wall_ms"] = step.wall_ms;
  return j;
}

StepRecord step_from_json(const json& j) {
  StepRecord step;
  step.step = j.at("t").get<int>();
  step.thought = j.value("thought", "");
  step.action = action_from_json(j.value("action", json::object()));
  const json obs = j.value("observation", json::object());
  step.observation.text = obs.value("text", "");
  step.observation.payload = obs.value("payload", json::object());
  step.wall_ms = j.value("wall_ms", 0.0);
  return step;
}

std::string Trace::to_jsonl() const {
  json header;
  header["type"] = "header";
  header["version"] = 1;
  header["query"] = query;
  header["config"] = config;

  json footer_json;
  footer_json["type"] = "footer";
  footer_json["status"] = footer.status;
  footer_json["answer"] = footer.answer;
  footer_json["answer_verified"] = footer.answer_verified;
  footer_json["error"] = footer.error;
  footer_json["verdicts"] = footer.verdicts;
  footer_json["chat_calls"] = footer.chat_calls;
  footer_json["embed_calls"] = footer.embed_calls;
  footer_json["steps"] = footer.steps;

  std::string out = header.dump() + "\n";
  for (const auto& step : steps) out += step_to_json(step).dump() + "\n";
  out += footer_json.dump() + "\n";
  return out;
}

void Trace::write(const fs::path& path) const { write_file(path, to_jsonl()); }

Trace Trace::parse(const std::string& jsonl) {
  Trace trace;
  bool saw_header = false;
  bool saw_footer = false;
  size_t lineno = 0;
  for (const auto& line : split(jsonl, '\n')) {
    ++lineno;
    if (trim(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw InputError("trace line " + std::to_string(lineno) + " is not valid JSON");
    const std::string type = j.value("type", "");
    if (type == "header") {
      trace.query = j.value("query", "");
      trace.config = j.value("config", json::object());
      saw_header = true;
    } else if (type == "step") {
      try {
        trace.steps.push_back(step_from_json(j));
      } catch (const std::exception& e) {
        throw InputError("trace line " + std::to_string(lineno) + ": " + e.what());
      }
    } else if (type == "footer") {
      trace.footer.status = j.value("status", "");
      trace.footer.answer = j.value("answer", "");
      trace.footer.answer_verified = j.value("answer_verified", false);
      trace.footer.error = j.value("error", "");
      trace.footer.verdicts = j.value("verdicts", json::array());
      trace.footer.chat_calls = j.value("chat_calls", 0);
      trace.footer.embed_calls = j.value("embed_calls", 0);
      trace.footer.steps = j.value("steps", 0);
      saw_footer = true;
    } else {
      throw InputError("trace line " + std::to_string(lineno) + " has unknown type '" + type +
                       "'");
    }
  }
  if (!saw_header || !saw_footer) throw InputError("trace is missing its header or footer");
  return trace;
}

Trace Trace::read(const fs::path& path) { return parse(read_file(path)); }

std::string Trace::render_text() const {
  std::ostringstream out;
  out << "Query: " << query << "\n";
  for (const auto& step : steps) {
    if (step.step < 0)
      out << "\n[pre-loop] ";
    else
      out << "\nStep " << step.step << "\n";
    if (!step.thought.empty()) out << "Thought: " << step.thought << "\n";
    out << "Action: " << describe_action(step.action) << "\n";
    out << "Observation: " << step.observation.text << "\n";
  }
  out << "\n--\nStatus: " << footer.status << "\n";
  out << "Answer: " << footer.answer << "\n";
  out << "Steps: " << footer.steps << ", chat calls: " << footer.chat_calls
      << ", embed calls: " << footer.embed_calls << "\n";
  return out.str();
}

}  // namespace admir::agent
