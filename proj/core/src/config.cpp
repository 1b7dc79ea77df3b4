#include "jitai/config.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <functional>
#include <map>
#include <optional>

namespace jitai {

std::string_view to_string(Profile p) { return p == Profile::kDesk ? "desk" : "paper"; }

ConfigError::ConfigError(std::size_t line, const std::string& message)
    : std::runtime_error(line > 0 ? fmt::format("line {}: {}", line, message)
                                  : message),
      line_(line) {}

namespace {

// Thrown by value parsers; rewrapped with a line number by the caller.
struct ValueError {
  std::string message;
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = s.find(',');
    const auto item = trim(s.substr(0, comma));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

template <typename T>
T parse_number(std::string_view text, const char* what) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc() || ptr != end) {
    throw ValueError{fmt::format("expected {}, got '{}'", what, text)};
  }
  return value;
}

double as_double(std::string_view v) { return parse_number<double>(v, "a number"); }
int as_int(std::string_view v) { return parse_number<int>(v, "an integer"); }
std::uint64_t as_u64(std::string_view v) {
  return parse_number<std::uint64_t>(v, "a non-negative integer");
}

std::vector<double> as_double_list(std::string_view v) {
  std::vector<double> out;
  for (auto item : split_list(v)) out.push_back(as_double(item));
  if (out.empty()) throw ValueError{"expected a comma-separated list of numbers"};
  return out;
}

template <typename T>
std::string join(const std::vector<T>& xs) {
  return fmt::format("{}", fmt::join(xs, ","));
}

struct KeyDef {
  std::string_view section;
  std::string_view key;
  std::string_view meaning;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

// Keys whose value lands in the config of the selected agent kind.
template <typename Member>
KeyDef per_kind_key(std::string_view key, std::string_view meaning,
                    Member ReinforceConfig::*r, Member DqnConfig::*d,
                    Member (*parse)(std::string_view)) {
  return {"agent", key, meaning,
          [=](ExperimentConfig& c, std::string_view v) {
            const Member value = parse(v);
            if (c.agent.kind == AgentKind::kReinforce) {
              c.agent.reinforce.*r = value;
            } else {
              c.agent.dqn.*d = value;
            }
          },
          [=](const ExperimentConfig& c) {
            return c.agent.kind == AgentKind::kReinforce
                       ? fmt::format("{}", c.agent.reinforce.*r)
                       : fmt::format("{}", c.agent.dqn.*d);
          }};
}

#define JITAI_ENV_KEY(name, parser, meaning)                                   \
  KeyDef {                                                                     \
    "env", #name, meaning,                                                     \
        [](ExperimentConfig& c, std::string_view v) { c.env.name = parser(v); }, \
        [](const ExperimentConfig& c) { return fmt::format("{}", c.env.name); } \
  }

const std::vector<KeyDef>& key_table() {
  static const std::vector<KeyDef> table = [] {
    std::vector<KeyDef> t = {
        JITAI_ENV_KEY(delta_h, as_double, "habituation decay per step without a message"),
        JITAI_ENV_KEY(epsilon_h, as_double, "habituation increment per message"),
        JITAI_ENV_KEY(delta_d, as_double, "disengagement decay on untailored or correct messages"),
        JITAI_ENV_KEY(epsilon_d, as_double, "disengagement increment on wrongly tailored messages"),
        JITAI_ENV_KEY(rho1, as_double, "base surplus steps of an untailored message"),
        JITAI_ENV_KEY(rho2, as_double, "base surplus steps of a correctly tailored message"),
        JITAI_ENV_KEY(sigma, as_double, "sensed-feature noise standard deviation"),
        JITAI_ENV_KEY(mu0, as_double, "baseline steps in context 0"),
        JITAI_ENV_KEY(mu1, as_double, "baseline steps in context 1"),
        JITAI_ENV_KEY(max_steps, as_int, "episode horizon in decision points"),
        JITAI_ENV_KEY(k, as_int, "time-indicator modulus"),
        {"agent", "kind", "learner: reinforce or dqn",
         [](ExperimentConfig& c, std::string_view v) {
           const auto kind = parse_agent_kind(v);
           if (!kind) throw ValueError{fmt::format("expected reinforce or dqn, got '{}'", v)};
           c.agent.kind = *kind;
         },
         [](const ExperimentConfig& c) { return std::string(to_string(c.agent.kind)); }},
        per_kind_key<int>("hidden", "hidden layer width", &ReinforceConfig::hidden,
                          &DqnConfig::hidden, as_int),
        per_kind_key<double>("lr", "Adam learning rate", &ReinforceConfig::lr,
                             &DqnConfig::lr, as_double),
        per_kind_key<double>("gamma", "discount rate", &ReinforceConfig::gamma,
                             &DqnConfig::gamma, as_double),
        per_kind_key<int>("episodes", "training episodes (REINFORCE: gradient steps)",
                          &ReinforceConfig::episodes, &DqnConfig::episodes, as_int),
        {"agent", "m_trajectories", "REINFORCE rollouts per gradient step",
         [](ExperimentConfig& c, std::string_view v) {
           c.agent.reinforce.m_trajectories = as_int(v);
         },
         [](const ExperimentConfig& c) {
           return fmt::format("{}", c.agent.reinforce.m_trajectories);
         }},
        {"agent", "batch_size", "DQN minibatch size",
         [](ExperimentConfig& c, std::string_view v) { c.agent.dqn.batch_size = as_int(v); },
         [](const ExperimentConfig& c) { return fmt::format("{}", c.agent.dqn.batch_size); }},
        {"agent", "replay_capacity", "DQN replay buffer capacity",
         [](ExperimentConfig& c, std::string_view v) {
           c.agent.dqn.replay_capacity = static_cast<std::size_t>(as_u64(v));
         },
         [](const ExperimentConfig& c) {
           return fmt::format("{}", c.agent.dqn.replay_capacity);
         }},
        {"agent", "eps_start", "DQN initial exploration rate",
         [](ExperimentConfig& c, std::string_view v) { c.agent.dqn.eps_start = as_double(v); },
         [](const ExperimentConfig& c) { return fmt::format("{}", c.agent.dqn.eps_start); }},
        {"agent", "eps_end", "DQN exploration floor",
         [](ExperimentConfig& c, std::string_view v) { c.agent.dqn.eps_end = as_double(v); },
         [](const ExperimentConfig& c) { return fmt::format("{}", c.agent.dqn.eps_end); }},
        {"agent", "eps_decrement", "DQN exploration decrement per update step",
         [](ExperimentConfig& c, std::string_view v) {
           c.agent.dqn.eps_decrement = as_double(v);
         },
         [](const ExperimentConfig& c) {
           return fmt::format("{}", c.agent.dqn.eps_decrement);
         }},
        {"agent", "target_sync", "DQN update steps between target-network copies",
         [](ExperimentConfig& c, std::string_view v) { c.agent.dqn.target_sync = as_int(v); },
         [](const ExperimentConfig& c) { return fmt::format("{}", c.agent.dqn.target_sync); }},
        {"experiment", "scenarios", "observation scenarios to run",
         [](ExperimentConfig& c, std::string_view v) {
           c.scenarios.clear();
           for (auto item : split_list(v)) {
             const auto s = parse_scenario(item);
             if (!s) throw ValueError{fmt::format("unknown scenario '{}'", item)};
             c.scenarios.push_back(*s);
           }
           if (c.scenarios.empty()) throw ValueError{"expected at least one scenario"};
         },
         [](const ExperimentConfig& c) {
           std::vector<std::string_view> names;
           for (Scenario s : c.scenarios) names.push_back(to_string(s));
           return join(names);
         }},
        {"experiment", "sigmas", "sigma grid (defaults to env.sigma)",
         [](ExperimentConfig& c, std::string_view v) { c.sigmas = as_double_list(v); },
         [](const ExperimentConfig& c) { return join(c.sigmas); }},
        {"experiment", "seeds", "repetition seeds",
         [](ExperimentConfig& c, std::string_view v) {
           c.seeds.clear();
           for (auto item : split_list(v)) c.seeds.push_back(as_u64(item));
           if (c.seeds.empty()) throw ValueError{"expected at least one seed"};
         },
         [](const ExperimentConfig& c) { return join(c.seeds); }},
        {"experiment", "eval_episodes", "evaluation episodes per trained cell",
         [](ExperimentConfig& c, std::string_view v) { c.eval_episodes = as_int(v); },
         [](const ExperimentConfig& c) { return fmt::format("{}", c.eval_episodes); }},
        {"experiment", "master_seed", "master seed mixed into every cell stream",
         [](ExperimentConfig& c, std::string_view v) { c.master_seed = as_u64(v); },
         [](const ExperimentConfig& c) { return fmt::format("{}", c.master_seed); }},
        {"experiment", "heatmap_sigma", "sigma used by the disengagement heatmap",
         [](ExperimentConfig& c, std::string_view v) { c.heatmap_sigma = as_double(v); },
         [](const ExperimentConfig& c) { return fmt::format("{}", c.heatmap_sigma); }},
        {"experiment", "epsilon_d_grid", "heatmap disengagement increments",
         [](ExperimentConfig& c, std::string_view v) { c.epsilon_d_grid = as_double_list(v); },
         [](const ExperimentConfig& c) { return join(c.epsilon_d_grid); }},
        {"experiment", "delta_d_grid", "heatmap disengagement decays",
         [](ExperimentConfig& c, std::string_view v) { c.delta_d_grid = as_double_list(v); },
         [](const ExperimentConfig& c) { return join(c.delta_d_grid); }},
        {"experiment", "action_episodes", "episodes rolled out for action histograms",
         [](ExperimentConfig& c, std::string_view v) { c.action_episodes = as_int(v); },
         [](const ExperimentConfig& c) { return fmt::format("{}", c.action_episodes); }},
    };
    return t;
  }();
  return table;
}

#undef JITAI_ENV_KEY

const KeyDef* find_key(std::string_view section, std::string_view key) {
  for (const auto& d : key_table()) {
    if (d.section == section && d.key == key) return &d;
  }
  return nullptr;
}

struct Entry {
  std::string section;
  std::string key;
  std::string value;
  std::size_t line = 0;  // 0 for overrides
};

std::vector<Entry> parse_text(std::string_view text) {
  std::vector<Entry> entries;
  std::map<std::string, std::size_t> seen;
  std::string section;
  bool has_env = false;
  bool has_agent = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const auto comment = line.find_first_of("#;");
    line = trim(line.substr(0, comment));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(line_no, "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section == "env") {
        has_env = true;
      } else if (section == "agent") {
        has_agent = true;
      } else if (section != "experiment") {
        throw ConfigError(line_no, fmt::format("unknown section [{}]", section));
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(line_no, fmt::format("expected 'key = value', got '{}'", line));
    }
    if (section.empty()) throw ConfigError(line_no, "key outside of any section");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (find_key(section, key) == nullptr) {
      throw ConfigError(line_no, fmt::format("unknown key '{}' in [{}]", key, section));
    }
    const std::string full = section + "." + key;
    if (auto it = seen.find(full); it != seen.end()) {
      throw ConfigError(line_no, fmt::format("duplicate key '{}' (first set on line {})",
                                             full, it->second));
    }
    seen[full] = line_no;
    entries.push_back({section, key, value, line_no});
  }
  if (!has_env) throw ConfigError(0, "missing required section [env]");
  if (!has_agent) throw ConfigError(0, "missing required section [agent]");
  return entries;
}

Entry parse_override(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) {
    throw ConfigError(0, fmt::format("override '{}' is not key=value", text));
  }
  const std::string name(trim(std::string_view(text).substr(0, eq)));
  const std::string value(trim(std::string_view(text).substr(eq + 1)));
  const auto dot = name.find('.');
  if (dot != std::string::npos) {
    const std::string section = name.substr(0, dot);
    const std::string key = name.substr(dot + 1);
    if (find_key(section, key) == nullptr) {
      throw ConfigError(0, fmt::format("override: unknown key '{}'", name));
    }
    return {section, key, value, 0};
  }
  const KeyDef* match = nullptr;
  for (const auto& d : key_table()) {
    if (d.key != name) continue;
    if (match != nullptr) {
      throw ConfigError(0, fmt::format("override: '{}' is ambiguous, use section.key", name));
    }
    match = &d;
  }
  if (match == nullptr) throw ConfigError(0, fmt::format("override: unknown key '{}'", name));
  return {std::string(match->section), name, value, 0};
}

}  // namespace

ExperimentConfig profile_defaults(Profile profile) {
  ExperimentConfig c;
  if (profile == Profile::kDesk) {
    c.agent.reinforce.episodes = 3000;
    c.agent.dqn.episodes = 500;
    c.eval_episodes = 300;
    c.action_episodes = 300;
  } else {
    c.agent.reinforce.episodes = 15000;
    c.agent.dqn.episodes = 1000;
    c.eval_episodes = 1000;
    c.action_episodes = 1000;
  }
  return c;
}

ResolvedConfig resolve_config(std::string_view text, Profile profile,
                              const std::vector<std::string>& overrides) {
  std::vector<Entry> entries = parse_text(text);
  for (const auto& o : overrides) {
    Entry e = parse_override(o);
    // The override replaces any file entry for the same key.
    std::erase_if(entries, [&](const Entry& f) {
      return f.section == e.section && f.key == e.key;
    });
    entries.push_back(std::move(e));
  }

  ResolvedConfig resolved;
  ExperimentConfig& c = resolved.config;
  c = profile_defaults(profile);
  std::map<std::string, std::string> origin;

  auto apply = [&](const Entry& e) {
    const KeyDef* def = find_key(e.section, e.key);
    try {
      def->set(c, e.value);
    } catch (const ValueError& err) {
      throw ConfigError(e.line, fmt::format("{}.{}: {}", e.section, e.key, err.message));
    }
    origin[e.section + "." + e.key] = e.line > 0 ? fmt::format("line {}", e.line) : "--set";
  };

  // kind decides where the shared agent keys land, so it goes first.
  for (const auto& e : entries) {
    if (e.section == "agent" && e.key == "kind") apply(e);
  }
  for (const auto& e : entries) {
    if (!(e.section == "agent" && e.key == "kind")) apply(e);
  }
  if (!origin.contains("experiment.sigmas")) {
    c.sigmas = {c.env.sigma};
    origin["experiment.sigmas"] = "follows env.sigma";
  }

  try {
    c.validate();
  } catch (const std::invalid_argument& err) {
    throw ConfigError(0, err.what());
  }

  const std::string profile_origin = fmt::format("profile {}", to_string(profile));
  for (const auto& def : key_table()) {
    const std::string full = fmt::format("{}.{}", def.section, def.key);
    std::string from = "default";
    if (auto it = origin.find(full); it != origin.end()) {
      from = it->second;
    } else if (full == "agent.episodes" || full == "experiment.eval_episodes" ||
               full == "experiment.action_episodes") {
      from = profile_origin;
    }
    resolved.provenance.push_back({full, def.get(c), from, std::string(def.meaning)});
  }
  return resolved;
}

ExperimentConfig parse_config(std::string_view text, Profile profile,
                              const std::vector<std::string>& overrides) {
  return resolve_config(text, profile, overrides).config;
}

std::string explain(const ResolvedConfig& resolved) {
  std::size_t key_w = 0;
  std::size_t val_w = 0;
  for (const auto& p : resolved.provenance) {
    key_w = std::max(key_w, p.key.size());
    val_w = std::max(val_w, p.value.size());
  }
  std::string out;
  for (const auto& p : resolved.provenance) {
    out += fmt::format("{:<{}}  {:<{}}  [{}]  {}\n", p.key, key_w, p.value, val_w,
                       p.origin, p.meaning);
  }
  return out;
}

}  // namespace jitai
