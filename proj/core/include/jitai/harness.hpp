#pragma once

// Experiment orchestration: training loops, evaluation, sweeps over
// (agent, scenario, sigma, seed) cells, and the derived analyses that
// feed the CSV outputs.

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "jitai/agents.hpp"
#include "jitai/env.hpp"
#include "jitai/stats.hpp"

namespace jitai {

enum class AgentKind { kReinforce, kDqn };

std::string_view to_string(AgentKind k);
std::optional<AgentKind> parse_agent_kind(std::string_view name);

struct AgentSpec {
  AgentKind kind = AgentKind::kReinforce;
  ReinforceConfig reinforce;
  DqnConfig dqn;

  int training_episodes() const {
    return kind == AgentKind::kReinforce ? reinforce.episodes : dqn.episodes;
  }
  AgentSpec with_kind(AgentKind k) const {
    AgentSpec s = *this;
    s.kind = k;
    return s;
  }
};

std::unique_ptr<Agent> make_agent(const AgentSpec& spec, Scenario scenario,
                                  Rng& init_rng);

// A decision rule with access to the full latent state; used for
// baselines and oracles that are not learners.
using StatePolicy =
    std::function<int(const EnvState& state, const Observation& obs, Rng& rng)>;

StatePolicy agent_policy(Agent& agent, ActMode mode);
StatePolicy constant_policy(Action a);
// Correctly tailored message on even steps, nothing on odd steps.
StatePolicy alternating_oracle_policy();
StatePolicy uniform_random_policy();

Trajectory run_episode(const StatePolicy& policy, const EnvParams& params,
                       Scenario scenario, Rng& rng);
Trajectory run_episode(Agent& agent, const EnvParams& params, Scenario scenario,
                       ActMode mode, Rng& rng);

struct Evaluation {
  double mean_return = 0.0;
  double std_return = 0.0;  // population std over episodes
  double disengagement_fraction = 0.0;
  int n_episodes = 0;
};

Evaluation evaluate(const StatePolicy& policy, const EnvParams& params,
                    Scenario scenario, int n, Rng& rng);
// REINFORCE keeps sampling from its policy; DQN acts greedily.
Evaluation evaluate(Agent& agent, const EnvParams& params, Scenario scenario,
                    int n, Rng& rng);

// Trains in place and returns one raw return per training episode. For
// REINFORCE an "episode" is one gradient step and its entry is the mean
// return of the M sampled trajectories.
std::vector<double> train(Agent& agent, const AgentSpec& spec,
                          const EnvParams& params, Scenario scenario, Rng& rng);

std::vector<double> learning_curve(std::span<const double> returns,
                                   std::size_t window = 100);

// ---------------------------------------------------------------------------
// Action distributions binned by posterior confidence max(p0, 1 - p0).

inline constexpr int kConfidenceBins = 5;

struct ActionHistogram {
  struct Bin {
    double low = 0.0;
    double high = 0.0;
    std::array<std::int64_t, kNumActions> counts{};
    std::int64_t total = 0;

    std::optional<double> frequency(int action) const;
  };
  std::array<Bin, kConfidenceBins> bins;
};

int confidence_bin(double p0);

ActionHistogram action_distribution(const StatePolicy& policy,
                                    const EnvParams& params, Scenario scenario,
                                    int n_episodes, Rng& rng);
ActionHistogram action_distribution(Agent& agent, const EnvParams& params,
                                    Scenario scenario, int n_episodes, Rng& rng);

// ---------------------------------------------------------------------------
// Sweeps

struct ExperimentConfig {
  EnvParams env;
  AgentSpec agent;
  std::vector<Scenario> scenarios = {Scenario::kPHD, Scenario::kLHD};
  std::vector<double> sigmas = {0.0};
  std::vector<std::uint64_t> seeds = {0, 1, 2};
  int eval_episodes = 1000;
  std::uint64_t master_seed = 0;

  double heatmap_sigma = 0.6;
  std::vector<double> epsilon_d_grid = {0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<double> delta_d_grid = {0.05, 0.1, 0.2, 0.3, 0.4};
  int action_episodes = 1000;

  void validate() const;
};

struct CellSpec {
  AgentSpec agent;
  EnvParams env;  // sigma already set for the cell
  Scenario scenario = Scenario::kCHD;
  std::uint64_t seed = 0;
  int eval_episodes = 1000;
  std::uint64_t master_seed = 0;

  std::string describe() const;
};

struct ResultRecord {
  AgentKind agent = AgentKind::kReinforce;
  Scenario scenario = Scenario::kCHD;
  double sigma = 0.0;
  double error_rate = 0.0;
  std::uint64_t seed = 0;
  double mean_return = 0.0;
  double std_return = 0.0;
  int n_episodes = 0;
  int episodes_trained = 0;
  double disengagement_fraction = 0.0;
};

struct CellOutcome {
  CellSpec spec;
  ResultRecord record;
  std::vector<double> training_returns;
  std::shared_ptr<Agent> agent;
};

struct CellError {
  std::size_t index = 0;
  std::string cell;
  std::string message;
};

struct SweepResult {
  std::vector<CellOutcome> cells;  // completed cells, in cell order
  std::vector<CellError> errors;
};

// Seed of an independent stream for one cell. Depends only on the cell's
// identity, never on its position in a sweep.
std::uint64_t cell_stream_seed(const CellSpec& cell, std::uint64_t stream);

CellOutcome run_cell(const CellSpec& cell);

// Called once per finished cell, serialized; `outcome` is null on failure.
using CellProgress = std::function<void(std::size_t index, const CellOutcome* outcome)>;

// Runs cells on up to `jobs` threads. Output order equals input order and
// is independent of `jobs`.
SweepResult run_cells(const std::vector<CellSpec>& cells, int jobs,
                      const CellProgress& progress = {});

// One cell per (scenario, sigma, seed), in that nesting order.
std::vector<CellSpec> experiment_cells(const ExperimentConfig& config);
SweepResult run_experiment(const ExperimentConfig& config, int jobs = 1,
                           const CellProgress& progress = {});

struct TTestRow {
  std::string comparison;
  double sigma = 0.0;
  double error_rate = 0.0;
  TTestResult result;
};

// P-H-D vs L-H-D per agent and sigma, plus REINFORCE vs DQN under P-T and
// L-T per sigma, wherever both groups have at least two seeds.
std::vector<TTestRow> compute_ttests(const std::vector<ResultRecord>& records);

struct HeatmapCell {
  double epsilon_d = 0.0;
  double delta_d = 0.0;
  double mean_return_p = 0.0;  // P-H-D, averaged over seeds
  double mean_return_l = 0.0;  // L-H-D, averaged over seeds
  double disengagement_p = 0.0;
  double disengagement_l = 0.0;
  double diff() const { return mean_return_p - mean_return_l; }
};

struct HeatmapResult {
  std::vector<HeatmapCell> cells;  // epsilon_d-major
  std::vector<CellError> errors;
};

std::vector<CellSpec> heatmap_cells(const ExperimentConfig& config);
HeatmapResult sweep_disengagement(const ExperimentConfig& config, int jobs = 1,
                                  const CellProgress& progress = {});

// ---------------------------------------------------------------------------
// CSV output. Numbers use the shortest round-trip representation.

void write_results_csv(std::ostream& out, const std::vector<ResultRecord>& rows);
void write_curves_csv(std::ostream& out, const std::vector<CellOutcome>& cells,
                      std::size_t window = 100);
struct ActionTable {
  AgentKind agent;
  Scenario scenario;
  double sigma;
  ActionHistogram histogram;
};
void write_actions_csv(std::ostream& out, const std::vector<ActionTable>& tables);
void write_ttests_csv(std::ostream& out, const std::vector<TTestRow>& rows);
void write_heatmap_csv(std::ostream& out, const std::vector<HeatmapCell>& cells);

std::vector<ResultRecord> records_of(const std::vector<CellOutcome>& cells);

}  // namespace jitai
