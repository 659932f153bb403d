#include "admir/prompts.hpp"

#include <cstdlib>

#ifndef ADMIR_DEFAULT_PROMPTS_DIR
#define ADMIR_DEFAULT_PROMPTS_DIR "assets/prompts"
#endif

namespace admir {

const std::vector<std::string>& PromptLibrary::required_templates() {
  static const std::vector<std::string> names = {
      "controller_system", "global_browse",  "frame_inspect_literal",
      "frame_inspect_semantic", "comm_expert", "query_rewrite",
      "captioning",         "registry_merge", "ocr",
      "refine",             "anchor_repair",  "anchor_extract",
      "verify_claims",      "judge",
  };
  return names;
}

PromptLibrary PromptLibrary::load(const fs::path& dir) {
  PromptLibrary lib;
  std::vector<std::string> missing;
  for (const auto& name : required_templates()) {
    const fs::path file = dir / (name + ".txt");
    if (!fs::exists(file)) {
      missing.push_back(file.filename().string());
      continue;
    }
    lib.templates_[name] = read_file(file);
  }
  if (!missing.empty())
    throw InputError("prompt directory " + dir.string() + " is missing: " + join(missing, ", "));
  return lib;
}

const std::string& PromptLibrary::get(const std::string& name) const {
  const auto it = templates_.find(name);
  if (it == templates_.end()) throw Error("unknown prompt template: " + name);
  return it->second;
}

std::string PromptLibrary::render(
    const std::string& name,
    const std::vector<std::pair<std::string, std::string>>& vars) const {
  return render_template(get(name), vars);
}

fs::path PromptLibrary::resolve_dir(const std::string& explicit_dir) {
  if (!explicit_dir.empty()) return explicit_dir;
  if (const char* env = std::getenv("ADMIR_PROMPTS_DIR"); env && *env) return env;
  return ADMIR_DEFAULT_PROMPTS_DIR;
}

}  // namespace admir
