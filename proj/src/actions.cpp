#include "admir/actions.hpp"

#include <sstream>

namespace admir::agent {

using nlohmann::json;

std::string to_string(InspectMode mode) {
  return mode == InspectMode::Literal ? "literal" : "semantic";
}

InspectMode inspect_mode_from_string(const std::string& name) {
  const std::string n = to_lower(trim(name));
  if (n == "literal" || n == "m_lit" || n == "dense") return InspectMode::Literal;
  if (n == "semantic" || n == "m_sem" || n == "sparse") return InspectMode::Semantic;
  throw ActionParseError("unknown inspect mode '" + name + "' (use literal or semantic)");
}

namespace {

std::string require_string(const json& args, const char* key) {
  if (!args.contains(key) || !args.at(key).is_string() ||
      trim(args.at(key).get<std::string>()).empty())
    throw ActionParseError(std::string("missing or empty argument '") + key + "'");
  return trim(args.at(key).get<std::string>());
}

TimeRange require_range(const json& args, double duration) {
  if (!args.contains("start") || !args.contains("end") || !args.at("start").is_number() ||
      !args.at("end").is_number())
    throw ActionParseError("missing numeric 'start'/'end' range arguments");
  TimeRange range{args.at("start").get<double>(), args.at("end").get<double>()};
  if (duration > 0) {
    range.start = std::clamp(range.start, 0.0, duration);
    range.end = std::clamp(range.end, 0.0, duration);
  }
  if (!(range.end > range.start))
    throw ActionParseError("range end must exceed start");
  return range;
}

std::string format_range(const TimeRange& r) {
  std::ostringstream ss;
  ss << r.start << "-" << r.end << " s";
  return ss.str();
}

}  // namespace

Action parse_action(const std::string& name, const json& arguments, double video_duration) {
  const json args = arguments.is_object() ? arguments : json::object();
  const std::string tool = to_lower(trim(name));

  if (tool == "global_browse") return GlobalBrowseAction{require_string(args, "query")};
  if (tool == "clip_search" || tool == "clip_search_tool")
    return ClipSearchAction{require_string(args, "query")};
  if (tool == "frame_inspect" || tool == "frame_inspect_tool") {
    FrameInspectAction action;
    action.query = require_string(args, "query");
    action.range = require_range(args, video_duration);
    action.mode = inspect_mode_from_string(args.value("mode", "literal"));
    return action;
  }
  if (tool == "communication_expert" || tool == "communication_expert_tool" ||
      tool == "comm_expert") {
    CommExpertAction action;
    action.focus = require_string(args, "focus");
    action.range = require_range(args, video_duration);
    return action;
  }
  if (tool == "finish") {
    FinishAction action;
    action.answer = require_string(args, "answer");
    if (args.contains("evidence") && args.at("evidence").is_array()) {
      for (const auto& item : args.at("evidence"))
        if (item.is_number_integer()) action.evidence.push_back(item.get<int>());
    }
    return action;
  }
  throw ActionParseError("unknown tool '" + name + "'");
}

std::string tool_name(const Action& action) {
  return std::visit(
      [](const auto& a) -> std::string {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, GlobalBrowseAction>) return "global_browse";
        if constexpr (std::is_same_v<T, ClipSearchAction>) return "clip_search";
        if constexpr (std::is_same_v<T, FrameInspectAction>) return "frame_inspect";
        if constexpr (std::is_same_v<T, CommExpertAction>) return "communication_expert";
        if constexpr (std::is_same_v<T, FinishAction>) return "finish";
        if constexpr (std::is_same_v<T, InvalidAction>) return "invalid";
      },
      action);
}

json action_to_json(const Action& action) {
  json j;
  j["tool"] = tool_name(action);
  json args = json::object();
  std::visit(
      [&](const auto& a) {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, GlobalBrowseAction>) {
          args["query"] = a.query;
        } else if constexpr (std::is_same_v<T, ClipSearchAction>) {
          args["query"] = a.query;
        } else if constexpr (std::is_same_v<T, FrameInspectAction>) {
          args["query"] = a.query;
          args["start"] = a.range.start;
          args["end"] = a.range.end;
          args["mode"] = to_string(a.mode);
        } else if constexpr (std::is_same_v<T, CommExpertAction>) {
          args["focus"] = a.focus;
          args["start"] = a.range.start;
          args["end"] = a.range.end;
        } else if constexpr (std::is_same_v<T, FinishAction>) {
          args["answer"] = a.answer;
          args["evidence"] = a.evidence;
        } else if constexpr (std::is_same_v<T, InvalidAction>) {
          args["raw"] = a.raw;
          args["error"] = a.error;
        }
      },
      action);
  j["arguments"] = std::move(args);
  return j;
}

Action action_from_json(const json& j) {
  const std::string tool = j.value("tool", "");
  const json args = j.value("arguments", json::object());
  if (tool == "invalid") return InvalidAction{args.value("raw", ""), args.value("error", "")};
  return parse_action(tool, args, 0.0);
}

std::string describe_action(const Action& action) {
  return std::visit(
      [](const auto& a) -> std::string {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, GlobalBrowseAction>)
          return "global_browse(query=\"" + a.query + "\")";
        else if constexpr (std::is_same_v<T, ClipSearchAction>)
          return "clip_search(query=\"" + a.query + "\")";
        else if constexpr (std::is_same_v<T, FrameInspectAction>)
          return "frame_inspect(query=\"" + a.query + "\", range=" + format_range(a.range) +
                 ", mode=" + to_string(a.mode) + ")";
        else if constexpr (std::is_same_v<T, CommExpertAction>)
          return "communication_expert(focus=\"" + a.focus +
                 "\", range=" + format_range(a.range) + ")";
        else if constexpr (std::is_same_v<T, FinishAction>)
          return "finish(answer=\"" + a.answer + "\")";
        else
          return "invalid(" + a.error + ")";
      },
      action);
}

}  // namespace admir::agent
