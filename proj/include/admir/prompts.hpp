#pragma once

#include <map>
#include <string>

#include "admir/common.hpp"

namespace admir {

/// Prompt templates live as editable .txt assets, one file per template,
/// loaded once at startup. Placeholders use {name} syntax (see
/// render_template; unknown braces survive, so JSON examples are safe).
class PromptLibrary {
 public:
  /// Every template named in `required_templates()` must exist in `dir`.
  static PromptLibrary load(const fs::path& dir);

  const std::string& get(const std::string& name) const;
  std::string render(const std::string& name,
                     const std::vector<std::pair<std::string, std::string>>& vars) const;

  static const std::vector<std::string>& required_templates();

  /// Resolution order: explicit argument, ADMIR_PROMPTS_DIR, compiled default.
  static fs::path resolve_dir(const std::string& explicit_dir = "");

 private:
  std::map<std::string, std::string> templates_;
};

}  // namespace admir
