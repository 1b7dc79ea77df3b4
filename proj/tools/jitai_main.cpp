// jitai: command-line front end for the intervention-simulation lab.
//
//   jitai run       --config cfg.ini --out out/
//   jitai sweep     --profile paper --jobs 4
//   jitai heatmap | actions | curve | selfcheck
//
// Exit status: 0 success, 1 check or experiment failure, 2 config error.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "jitai/config.hpp"
#include "jitai/harness.hpp"
#include "jitai/selfcheck.hpp"

namespace {

using namespace jitai;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

const std::vector<double> kSweepSigmas = {0.0, 0.4, 0.5, 0.8, 1.0, 2.0};

struct Options {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string profile = "desk";
  int jobs = 1;
  std::vector<std::string> sets;
  bool explain = false;
  bool dry = false;
  // selfcheck
  std::string filter;
  bool flip_gradient_sign = false;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(0, fmt::format("cannot open config file '{}'", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool origin_is_default(const ResolvedConfig& r, std::string_view key) {
  for (const auto& p : r.provenance) {
    if (p.key == key) return p.origin == "default" || p.origin == "follows env.sigma";
  }
  return true;
}

ResolvedConfig load(const Options& opt) {
  const std::string text =
      opt.config_path.empty() ? std::string("[env]\n[agent]\n") : read_file(opt.config_path);
  const Profile profile = opt.profile == "paper" ? Profile::kPaper : Profile::kDesk;
  std::vector<std::string> overrides = opt.sets;
  if (opt.seed_given) overrides.push_back(fmt::format("experiment.master_seed={}", opt.seed));
  return resolve_config(text, profile, overrides);
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  body(out);
  if (!out) throw std::runtime_error(fmt::format("write to '{}' failed", path.string()));
  std::cerr << "wrote " << path.string() << "\n";
}

void print_cells(const std::vector<CellSpec>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    std::cout << fmt::format("[{}] {} train_episodes={} eval_episodes={}\n", i,
                             cells[i].describe(), cells[i].agent.training_episodes(),
                             cells[i].eval_episodes);
  }
  std::cout << cells.size() << " cells\n";
}

CellProgress logger(std::size_t total) {
  auto start = std::chrono::steady_clock::now();
  auto done = std::make_shared<std::size_t>(0);
  return [=](std::size_t index, const CellOutcome* outcome) {
    ++*done;
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (outcome != nullptr) {
      std::cerr << fmt::format("[{}/{}] cell {} {}: mean_return={:.1f} ({:.0f}s)\n", *done,
                               total, index, outcome->spec.describe(),
                               outcome->record.mean_return, secs);
    } else {
      std::cerr << fmt::format("[{}/{}] cell {} FAILED ({:.0f}s)\n", *done, total, index,
                               secs);
    }
  };
}

int report_errors(const std::vector<CellError>& errors) {
  for (const auto& e : errors) {
    std::cerr << fmt::format("error in cell {} ({}): {}\n", e.index, e.cell, e.message);
  }
  return errors.empty() ? kExitOk : kExitFailure;
}

std::vector<CellSpec> sweep_cells(const ExperimentConfig& base, bool sigmas_default) {
  std::vector<CellSpec> cells;
  for (AgentKind kind : {AgentKind::kReinforce, AgentKind::kDqn}) {
    ExperimentConfig c = base;
    c.agent = base.agent.with_kind(kind);
    c.scenarios.assign(kAllScenarios.begin(), kAllScenarios.end());
    if (sigmas_default) c.sigmas = kSweepSigmas;
    const auto part = experiment_cells(c);
    cells.insert(cells.end(), part.begin(), part.end());
  }
  return cells;
}

int write_experiment_outputs(const SweepResult& result, const fs::path& out) {
  const auto records = records_of(result.cells);
  write_file(out / "results.csv", [&](std::ostream& os) { write_results_csv(os, records); });
  write_file(out / "curves.csv", [&](std::ostream& os) { write_curves_csv(os, result.cells); });
  write_file(out / "ttests.csv",
             [&](std::ostream& os) { write_ttests_csv(os, compute_ttests(records)); });
  return report_errors(result.errors);
}

int cmd_run(const Options& opt, const ResolvedConfig& rc) {
  const auto cells = experiment_cells(rc.config);
  if (opt.dry) {
    print_cells(cells);
    return kExitOk;
  }
  return write_experiment_outputs(run_cells(cells, opt.jobs, logger(cells.size())),
                                  opt.out_dir);
}

int cmd_sweep(const Options& opt, const ResolvedConfig& rc) {
  const auto cells = sweep_cells(rc.config, origin_is_default(rc, "experiment.sigmas"));
  if (opt.dry) {
    print_cells(cells);
    return kExitOk;
  }
  return write_experiment_outputs(run_cells(cells, opt.jobs, logger(cells.size())),
                                  opt.out_dir);
}

int cmd_heatmap(const Options& opt, const ResolvedConfig& rc) {
  const auto cells = heatmap_cells(rc.config);
  if (opt.dry) {
    print_cells(cells);
    return kExitOk;
  }
  const HeatmapResult h = sweep_disengagement(rc.config, opt.jobs, logger(cells.size()));
  write_file(fs::path(opt.out_dir) / "heatmap.csv",
             [&](std::ostream& os) { write_heatmap_csv(os, h.cells); });
  return report_errors(h.errors);
}

int cmd_actions(const Options& opt, const ResolvedConfig& rc) {
  const auto cells = experiment_cells(rc.config);
  if (opt.dry) {
    print_cells(cells);
    return kExitOk;
  }
  const SweepResult result = run_cells(cells, opt.jobs, logger(cells.size()));
  // Histograms are pooled over seeds per (scenario, sigma).
  std::vector<ActionTable> tables;
  for (const auto& cell : result.cells) {
    Rng rng(cell_stream_seed(cell.spec, 4));
    const ActionHistogram h = action_distribution(
        *cell.agent, cell.spec.env, cell.spec.scenario, rc.config.action_episodes, rng);
    auto it = std::find_if(tables.begin(), tables.end(), [&](const ActionTable& t) {
      return t.agent == cell.spec.agent.kind && t.scenario == cell.spec.scenario &&
             t.sigma == cell.spec.env.sigma;
    });
    if (it == tables.end()) {
      tables.push_back({cell.spec.agent.kind, cell.spec.scenario, cell.spec.env.sigma, h});
      continue;
    }
    for (std::size_t b = 0; b < h.bins.size(); ++b) {
      for (std::size_t a = 0; a < h.bins[b].counts.size(); ++a) {
        it->histogram.bins[b].counts[a] += h.bins[b].counts[a];
      }
      it->histogram.bins[b].total += h.bins[b].total;
    }
  }
  write_file(fs::path(opt.out_dir) / "actions.csv",
             [&](std::ostream& os) { write_actions_csv(os, tables); });
  write_file(fs::path(opt.out_dir) / "results.csv",
             [&](std::ostream& os) { write_results_csv(os, records_of(result.cells)); });
  return report_errors(result.errors);
}

int cmd_curve(const Options& opt, const ResolvedConfig& rc) {
  ExperimentConfig c = rc.config;
  if (origin_is_default(rc, "experiment.scenarios")) {
    c.scenarios = {Scenario::kCHD, Scenario::kPHD, Scenario::kPT};
  }
  const auto cells = experiment_cells(c);
  if (opt.dry) {
    print_cells(cells);
    return kExitOk;
  }
  const SweepResult result = run_cells(cells, opt.jobs, logger(cells.size()));
  write_file(fs::path(opt.out_dir) / "curves.csv",
             [&](std::ostream& os) { write_curves_csv(os, result.cells); });
  return report_errors(result.errors);
}

int cmd_selfcheck(const Options& opt) {
  SelfcheckOptions so;
  so.filter = opt.filter;
  so.flip_gradient_sign = opt.flip_gradient_sign;
  const SelfcheckReport report = run_selfcheck(so);
  double total = 0.0;
  for (const auto& c : report.checks) {
    std::cout << fmt::format("{} {:<28} {:7.2f}s  {}\n", c.passed ? "PASS" : "FAIL", c.name,
                             c.seconds, c.detail);
    total += c.seconds;
  }
  std::cout << fmt::format("{} checks, {} in {:.1f}s\n", report.checks.size(),
                           report.all_passed() ? "all passed" : "FAILURES", total);
  return report.all_passed() ? kExitOk : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reinforcement-learning lab for just-in-time adaptive intervention simulation"};
  app.require_subcommand(1);
  app.fallthrough();

  Options opt;
  app.add_option("--config", opt.config_path, "Configuration file ([env], [agent], [experiment])");
  app.add_option("--out", opt.out_dir, "Output directory")->capture_default_str();
  auto* seed = app.add_option("--seed", opt.seed, "Master seed");
  app.add_option("--profile", opt.profile, "Budget profile")
      ->check(CLI::IsMember({"paper", "desk"}))
      ->capture_default_str();
  app.add_option("--jobs", opt.jobs, "Parallel cells")->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--set", opt.sets, "Override section.key=value (repeatable)")
      ->allow_extra_args(false)
      ->take_all();
  app.add_flag("--explain", opt.explain, "Print every resolved setting and its origin");
  app.add_flag("--dry", opt.dry, "Validate and list cells without running them");

  auto* run = app.add_subcommand("run", "Train and evaluate the configured cells");
  auto* sweep = app.add_subcommand("sweep", "Both agents over all scenarios and the sigma grid");
  auto* heatmap = app.add_subcommand("heatmap", "P-H-D vs L-H-D over disengagement dynamics");
  auto* actions = app.add_subcommand("actions", "Action distributions by posterior confidence");
  auto* curve = app.add_subcommand("curve", "Learning curves");
  auto* selfcheck = app.add_subcommand("selfcheck", "Run the built-in invariant checks");
  selfcheck->add_option("--filter", opt.filter, "Only checks whose name contains this");
  selfcheck->add_flag("--flip-gradient-sign", opt.flip_gradient_sign,
                      "Fault injection: negate analytic gradients");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  opt.seed_given = seed->count() > 0;

  if (selfcheck->parsed()) return cmd_selfcheck(opt);

  ResolvedConfig rc;
  try {
    rc = load(opt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  if (opt.explain) {
    std::cout << explain(rc);
    if (!opt.dry) return kExitOk;
  }

  try {
    if (run->parsed()) return cmd_run(opt, rc);
    if (sweep->parsed()) return cmd_sweep(opt, rc);
    if (heatmap->parsed()) return cmd_heatmap(opt, rc);
    if (actions->parsed()) return cmd_actions(opt, rc);
    if (curve->parsed()) return cmd_curve(opt, rc);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}
