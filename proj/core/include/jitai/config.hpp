#pragma once

// Sectioned key=value configuration:
//
//   [env]         simulator constants (delta_h, ..., k)
//   [agent]       learner choice and hyperparameters
//   [experiment]  sweep axes and analysis settings (optional section)
//
// '#' and ';' start comments. Unknown sections or keys, malformed values,
// and a missing [env] or [agent] section are errors carrying the line
// number. Overrides ("section.key=value", or a bare key that names exactly
// one section's key) are applied after the file.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "jitai/harness.hpp"

namespace jitai {

enum class Profile { kDesk, kPaper };

std::string_view to_string(Profile p);

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::size_t line, const std::string& message);

  // 0 when the error is not tied to a file line (e.g. an override).
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct Provenance {
  std::string key;     // "section.key"
  std::string value;   // resolved value as text
  std::string origin;  // "default", "profile <name>", "line N", "--set"
  std::string meaning;
};

struct ResolvedConfig {
  ExperimentConfig config;
  std::vector<Provenance> provenance;  // one entry per known key
};

// Budget defaults for a profile: training episodes per agent kind and
// evaluation episodes.
ExperimentConfig profile_defaults(Profile profile);

ResolvedConfig resolve_config(std::string_view text, Profile profile,
                              const std::vector<std::string>& overrides = {});

ExperimentConfig parse_config(std::string_view text, Profile profile = Profile::kDesk,
                              const std::vector<std::string>& overrides = {});

// Human-readable listing of every resolved key with its origin.
std::string explain(const ResolvedConfig& resolved);

}  // namespace jitai
