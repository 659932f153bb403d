#pragma once

#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "admir/common.hpp"

namespace admir::agent {

class ActionParseError : public Error {
 public:
  using Error::Error;
};

enum class InspectMode { Literal, Semantic };

std::string to_string(InspectMode mode);
InspectMode inspect_mode_from_string(const std::string& name);

struct GlobalBrowseAction {
  std::string query;
};

struct ClipSearchAction {
  std::string query;
};

struct FrameInspectAction {
  std::string query;
  TimeRange range;
  InspectMode mode = InspectMode::Literal;
};

struct CommExpertAction {
  std::string focus;
  TimeRange range;
};

struct FinishAction {
  std::string answer;
  std::vector<int> evidence;  // step indices; empty = whole history
};

/// Controller emitted something unparseable even after the repair re-prompt;
/// the step still counts and is recorded as a no-op.
struct InvalidAction {
  std::string raw;
  std::string error;
};

using Action = std::variant<GlobalBrowseAction, ClipSearchAction, FrameInspectAction,
                            CommExpertAction, FinishAction, InvalidAction>;

/// Wire names: global_browse, clip_search, frame_inspect, communication_expert,
/// finish. Range arguments are {"start": s, "end": s} seconds.
Action parse_action(const std::string& tool_name, const nlohmann::json& arguments,
                    double video_duration);

std::string tool_name(const Action& action);
nlohmann::json action_to_json(const Action& action);
Action action_from_json(const nlohmann::json& j);

/// One-line rendering used in serialized history.
std::string describe_action(const Action& action);

/// What a tool returned: text shown to the controller plus a structured
/// payload kept for the trace.
struct Observation {
  std::string text;
  nlohmann::json payload = nlohmann::json::object();
};

}  // namespace admir::agent
