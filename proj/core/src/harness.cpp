#include "jitai/harness.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <map>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>
#include <tuple>

namespace jitai {

std::string_view to_string(AgentKind k) {
  return k == AgentKind::kReinforce ? "reinforce" : "dqn";
}

std::optional<AgentKind> parse_agent_kind(std::string_view name) {
  if (name == "reinforce") return AgentKind::kReinforce;
  if (name == "dqn") return AgentKind::kDqn;
  return std::nullopt;
}

std::unique_ptr<Agent> make_agent(const AgentSpec& spec, Scenario scenario,
                                  Rng& init_rng) {
  const int dim = observation_dim(scenario);
  if (spec.kind == AgentKind::kReinforce) {
    return std::make_unique<ReinforceAgent>(dim, spec.reinforce, init_rng);
  }
  return std::make_unique<DqnAgent>(dim, spec.dqn, init_rng);
}

StatePolicy agent_policy(Agent& agent, ActMode mode) {
  return [&agent, mode](const EnvState&, const Observation& obs, Rng& rng) {
    return agent.act(obs, mode, rng);
  };
}

StatePolicy constant_policy(Action a) {
  return [a](const EnvState&, const Observation&, Rng&) { return to_index(a); };
}

StatePolicy alternating_oracle_policy() {
  return [](const EnvState& s, const Observation&, Rng&) {
    return s.t % 2 == 0 ? s.c + 2 : 0;
  };
}

StatePolicy uniform_random_policy() {
  return [](const EnvState&, const Observation&, Rng& rng) {
    return std::uniform_int_distribution<int>(0, kNumActions - 1)(rng);
  };
}

Trajectory run_episode(const StatePolicy& policy, const EnvParams& params,
                       Scenario scenario, Rng& rng) {
  Trajectory tr;
  tr.observations.reserve(static_cast<std::size_t>(params.max_steps));
  EnvState state = reset(params, rng);
  while (!state.terminated) {
    const Observation obs = observe(state, scenario, params.k);
    const int a = policy(state, obs, rng);
    StepResult r = step(state, action_from_index(a), params, rng);
    tr.append(obs, a, r.reward);
    tr.cause = r.cause;
    state = r.state;
  }
  return tr;
}

Trajectory run_episode(Agent& agent, const EnvParams& params, Scenario scenario,
                       ActMode mode, Rng& rng) {
  if (agent.input_dim() != observation_dim(scenario)) {
    throw std::invalid_argument("agent input width does not match scenario " +
                                std::string(to_string(scenario)));
  }
  return run_episode(agent_policy(agent, mode), params, scenario, rng);
}

Evaluation evaluate(const StatePolicy& policy, const EnvParams& params,
                    Scenario scenario, int n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("evaluate: n must be >= 1");
  std::vector<double> returns;
  returns.reserve(static_cast<std::size_t>(n));
  int disengaged = 0;
  for (int i = 0; i < n; ++i) {
    const Trajectory tr = run_episode(policy, params, scenario, rng);
    returns.push_back(tr.total_return);
    if (tr.cause == Termination::kDisengagement) ++disengaged;
  }
  Evaluation e;
  e.n_episodes = n;
  e.mean_return = summarize(returns).mean;
  e.std_return = population_std(returns);
  e.disengagement_fraction = static_cast<double>(disengaged) / n;
  return e;
}

Evaluation evaluate(Agent& agent, const EnvParams& params, Scenario scenario,
                    int n, Rng& rng) {
  if (agent.input_dim() != observation_dim(scenario)) {
    throw std::invalid_argument("agent input width does not match scenario");
  }
  return evaluate(agent_policy(agent, ActMode::kGreedyEval), params, scenario, n,
                  rng);
}

namespace {

std::vector<double> train_reinforce(ReinforceAgent& agent, const EnvParams& params,
                                    Scenario scenario, Rng& rng) {
  const ReinforceConfig& cfg = agent.config();
  std::vector<double> curve;
  curve.reserve(static_cast<std::size_t>(cfg.episodes));
  std::vector<Trajectory> batch(static_cast<std::size_t>(cfg.m_trajectories));
  for (int it = 0; it < cfg.episodes; ++it) {
    double total = 0.0;
    for (auto& tr : batch) {
      tr = run_episode(agent, params, scenario, ActMode::kTrainSample, rng);
      total += tr.total_return;
    }
    agent.update(batch);
    curve.push_back(total / cfg.m_trajectories);
  }
  return curve;
}

std::vector<double> train_dqn(DqnAgent& agent, const EnvParams& params,
                              Scenario scenario, Rng& rng) {
  const DqnConfig& cfg = agent.config();
  std::vector<double> curve;
  curve.reserve(static_cast<std::size_t>(cfg.episodes));
  for (int ep = 0; ep < cfg.episodes; ++ep) {
    EnvState state = reset(params, rng);
    Observation obs = observe(state, scenario, params.k);
    double total = 0.0;
    while (!state.terminated) {
      const int a = agent.act(obs, ActMode::kTrainSample, rng);
      StepResult r = step(state, action_from_index(a), params, rng);
      const Observation next = observe(r.state, scenario, params.k);
      agent.remember({obs, a, r.reward, next, r.terminated});
      agent.update(rng);
      total += r.reward;
      state = r.state;
      obs = next;
    }
    curve.push_back(total);
  }
  return curve;
}

}  // namespace

std::vector<double> train(Agent& agent, const AgentSpec& spec,
                          const EnvParams& params, Scenario scenario, Rng& rng) {
  if (agent.input_dim() != observation_dim(scenario)) {
    throw std::invalid_argument("agent input width does not match scenario");
  }
  if (spec.kind == AgentKind::kReinforce) {
    auto* r = dynamic_cast<ReinforceAgent*>(&agent);
    if (r == nullptr) throw std::invalid_argument("AgentSpec kind is reinforce, agent is not");
    return train_reinforce(*r, params, scenario, rng);
  }
  auto* d = dynamic_cast<DqnAgent*>(&agent);
  if (d == nullptr) throw std::invalid_argument("AgentSpec kind is dqn, agent is not");
  return train_dqn(*d, params, scenario, rng);
}

std::vector<double> learning_curve(std::span<const double> returns,
                                   std::size_t window) {
  return moving_average(returns, window);
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::array<double, kConfidenceBins + 1> kBinEdges = {0.5, 0.6, 0.7,
                                                               0.8, 0.9, 1.0};

}  // namespace

std::optional<double> ActionHistogram::Bin::frequency(int action) const {
  if (total == 0) return std::nullopt;
  return static_cast<double>(counts[static_cast<std::size_t>(action)]) /
         static_cast<double>(total);
}

int confidence_bin(double p0) {
  const double p_max = std::max(p0, 1.0 - p0);
  int bin = 0;
  for (int i = 1; i < kConfidenceBins; ++i) {
    if (p_max >= kBinEdges[static_cast<std::size_t>(i)]) bin = i;
  }
  return bin;
}

ActionHistogram action_distribution(const StatePolicy& policy,
                                    const EnvParams& params, Scenario scenario,
                                    int n_episodes, Rng& rng) {
  ActionHistogram hist;
  for (int i = 0; i < kConfidenceBins; ++i) {
    hist.bins[static_cast<std::size_t>(i)].low = kBinEdges[static_cast<std::size_t>(i)];
    hist.bins[static_cast<std::size_t>(i)].high =
        kBinEdges[static_cast<std::size_t>(i + 1)];
  }
  auto recording = [&](const EnvState& s, const Observation& obs, Rng& r) {
    const int a = policy(s, obs, r);
    auto& bin = hist.bins[static_cast<std::size_t>(confidence_bin(s.p0))];
    ++bin.counts[static_cast<std::size_t>(a)];
    ++bin.total;
    return a;
  };
  for (int i = 0; i < n_episodes; ++i) {
    run_episode(recording, params, scenario, rng);
  }
  return hist;
}

ActionHistogram action_distribution(Agent& agent, const EnvParams& params,
                                    Scenario scenario, int n_episodes, Rng& rng) {
  if (agent.input_dim() != observation_dim(scenario)) {
    throw std::invalid_argument("agent input width does not match scenario");
  }
  return action_distribution(agent_policy(agent, ActMode::kGreedyEval), params,
                             scenario, n_episodes, rng);
}

// ---------------------------------------------------------------------------

void ExperimentConfig::validate() const {
  env.validate();
  agent.reinforce.validate();
  agent.dqn.validate();
  if (scenarios.empty()) throw std::invalid_argument("at least one scenario required");
  if (sigmas.empty()) throw std::invalid_argument("at least one sigma required");
  for (double s : sigmas) {
    if (!(s >= 0.0) || !std::isfinite(s)) {
      throw std::invalid_argument("sigma values must be finite and >= 0");
    }
  }
  if (seeds.empty()) throw std::invalid_argument("at least one seed required");
  if (eval_episodes < 1) throw std::invalid_argument("eval_episodes must be >= 1");
  if (action_episodes < 1) throw std::invalid_argument("action_episodes must be >= 1");
  if (!(heatmap_sigma >= 0.0)) throw std::invalid_argument("heatmap_sigma must be >= 0");
}

std::string CellSpec::describe() const {
  return fmt::format("agent={} scenario={} sigma={} seed={} epsilon_d={} delta_d={}",
                     to_string(agent.kind), to_string(scenario), env.sigma, seed,
                     env.epsilon_d, env.delta_d);
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t h, std::uint64_t v) { return splitmix64(h ^ splitmix64(v)); }

std::uint64_t bits(double v) {
  // Fold -0.0 onto 0.0 so equal values hash equally.
  return std::bit_cast<std::uint64_t>(v == 0.0 ? 0.0 : v);
}

}  // namespace

// Agent kind, scenario and sigma are not mixed in: cells that differ only
// in learner, observation set or noise level share randomness. Each step
// draws one standard normal whatever sigma is, so across sigma the feature
// noise is the same draw rescaled.
std::uint64_t cell_stream_seed(const CellSpec& cell, std::uint64_t stream) {
  const EnvParams& e = cell.env;
  std::uint64_t h = splitmix64(cell.master_seed);
  h = mix(h, cell.seed);
  for (double v : {e.delta_h, e.epsilon_h, e.delta_d, e.epsilon_d, e.rho1, e.rho2,
                   e.mu0, e.mu1}) {
    h = mix(h, bits(v));
  }
  h = mix(h, static_cast<std::uint64_t>(e.max_steps));
  h = mix(h, static_cast<std::uint64_t>(e.k));
  return mix(h, stream);
}

CellOutcome run_cell(const CellSpec& cell) {
  cell.env.validate();
  Rng init_rng(cell_stream_seed(cell, 1));
  Rng train_rng(cell_stream_seed(cell, 2));
  Rng eval_rng(cell_stream_seed(cell, 3));

  CellOutcome out;
  out.spec = cell;
  std::shared_ptr<Agent> agent = make_agent(cell.agent, cell.scenario, init_rng);
  out.training_returns = train(*agent, cell.agent, cell.env, cell.scenario, train_rng);
  const Evaluation ev =
      evaluate(*agent, cell.env, cell.scenario, cell.eval_episodes, eval_rng);

  ResultRecord& r = out.record;
  r.agent = cell.agent.kind;
  r.scenario = cell.scenario;
  r.sigma = cell.env.sigma;
  r.error_rate = error_rate_for_sigma(cell.env.sigma);
  r.seed = cell.seed;
  r.mean_return = ev.mean_return;
  r.std_return = ev.std_return;
  r.n_episodes = ev.n_episodes;
  r.episodes_trained = cell.agent.training_episodes();
  r.disengagement_fraction = ev.disengagement_fraction;
  out.agent = std::move(agent);
  return out;
}

SweepResult run_cells(const std::vector<CellSpec>& cells, int jobs,
                      const CellProgress& progress) {
  std::vector<std::optional<CellOutcome>> slots(cells.size());
  std::vector<std::optional<CellError>> failures(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex progress_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        slots[i] = run_cell(cells[i]);
      } catch (const std::exception& e) {
        failures[i] = CellError{i, cells[i].describe(), e.what()};
      }
      if (progress) {
        std::lock_guard lock(progress_mutex);
        progress(i, slots[i] ? &*slots[i] : nullptr);
      }
    }
  };

  const int n_threads =
      std::clamp(jobs, 1, static_cast<int>(std::max<std::size_t>(cells.size(), 1)));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }

  SweepResult result;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (slots[i]) result.cells.push_back(std::move(*slots[i]));
    if (failures[i]) result.errors.push_back(std::move(*failures[i]));
  }
  return result;
}

std::vector<CellSpec> experiment_cells(const ExperimentConfig& config) {
  config.validate();
  std::vector<CellSpec> cells;
  for (Scenario s : config.scenarios) {
    for (double sigma : config.sigmas) {
      for (std::uint64_t seed : config.seeds) {
        CellSpec c;
        c.agent = config.agent;
        c.env = config.env;
        c.env.sigma = sigma;
        c.scenario = s;
        c.seed = seed;
        c.eval_episodes = config.eval_episodes;
        c.master_seed = config.master_seed;
        cells.push_back(c);
      }
    }
  }
  return cells;
}

SweepResult run_experiment(const ExperimentConfig& config, int jobs,
                           const CellProgress& progress) {
  return run_cells(experiment_cells(config), jobs, progress);
}

std::vector<ResultRecord> records_of(const std::vector<CellOutcome>& cells) {
  std::vector<ResultRecord> out;
  out.reserve(cells.size());
  for (const auto& c : cells) out.push_back(c.record);
  return out;
}

std::vector<TTestRow> compute_ttests(const std::vector<ResultRecord>& records) {
  using Key = std::tuple<int, int, double>;  // agent, scenario, sigma
  std::map<Key, std::vector<std::pair<std::uint64_t, double>>> groups;
  std::vector<double> sigmas;
  for (const auto& r : records) {
    groups[{static_cast<int>(r.agent), static_cast<int>(r.scenario), r.sigma}]
        .emplace_back(r.seed, r.mean_return);
    sigmas.push_back(r.sigma);
  }
  std::sort(sigmas.begin(), sigmas.end());
  sigmas.erase(std::unique(sigmas.begin(), sigmas.end()), sigmas.end());

  auto sample = [&](AgentKind a, Scenario s, double sigma) {
    std::vector<double> xs;
    auto it = groups.find({static_cast<int>(a), static_cast<int>(s), sigma});
    if (it == groups.end()) return xs;
    auto entries = it->second;
    std::sort(entries.begin(), entries.end());
    for (const auto& e : entries) xs.push_back(e.second);
    return xs;
  };

  std::vector<TTestRow> rows;
  auto add = [&](std::string name, double sigma, const std::vector<double>& a,
                 const std::vector<double>& b) {
    if (a.size() < 2 || b.size() < 2) return;
    rows.push_back({std::move(name), sigma, error_rate_for_sigma(sigma),
                    welch_t_test(a, b)});
  };
  for (AgentKind agent : {AgentKind::kDqn, AgentKind::kReinforce}) {
    for (double sigma : sigmas) {
      add(fmt::format("{} P-H-D vs L-H-D", to_string(agent)), sigma,
          sample(agent, Scenario::kPHD, sigma), sample(agent, Scenario::kLHD, sigma));
    }
  }
  for (Scenario s : {Scenario::kPT, Scenario::kLT}) {
    for (double sigma : sigmas) {
      add(fmt::format("{} reinforce vs dqn", to_string(s)), sigma,
          sample(AgentKind::kReinforce, s, sigma), sample(AgentKind::kDqn, s, sigma));
    }
  }
  return rows;
}

std::vector<CellSpec> heatmap_cells(const ExperimentConfig& config) {
  config.validate();
  if (config.epsilon_d_grid.empty() || config.delta_d_grid.empty()) {
    throw std::invalid_argument("heatmap grids must be non-empty");
  }
  std::vector<CellSpec> cells;
  for (double eps : config.epsilon_d_grid) {
    for (double delta : config.delta_d_grid) {
      for (Scenario s : {Scenario::kPHD, Scenario::kLHD}) {
        for (std::uint64_t seed : config.seeds) {
          CellSpec c;
          c.agent = config.agent;
          c.env = config.env;
          c.env.sigma = config.heatmap_sigma;
          c.env.epsilon_d = eps;
          c.env.delta_d = delta;
          c.scenario = s;
          c.seed = seed;
          c.eval_episodes = config.eval_episodes;
          c.master_seed = config.master_seed;
          cells.push_back(c);
        }
      }
    }
  }
  return cells;
}

HeatmapResult sweep_disengagement(const ExperimentConfig& config, int jobs,
                                  const CellProgress& progress) {
  SweepResult sweep = run_cells(heatmap_cells(config), jobs, progress);

  HeatmapResult out;
  out.errors = std::move(sweep.errors);
  for (double eps : config.epsilon_d_grid) {
    for (double delta : config.delta_d_grid) {
      HeatmapCell h;
      h.epsilon_d = eps;
      h.delta_d = delta;
      std::vector<double> p, l, dp, dl;
      for (const auto& c : sweep.cells) {
        if (c.spec.env.epsilon_d != eps || c.spec.env.delta_d != delta) continue;
        auto& returns = c.spec.scenario == Scenario::kPHD ? p : l;
        auto& dis = c.spec.scenario == Scenario::kPHD ? dp : dl;
        returns.push_back(c.record.mean_return);
        dis.push_back(c.record.disengagement_fraction);
      }
      if (p.empty() || l.empty()) continue;  // failed cells reported in errors
      h.mean_return_p = summarize(p).mean;
      h.mean_return_l = summarize(l).mean;
      h.disengagement_p = summarize(dp).mean;
      h.disengagement_l = summarize(dl).mean;
      out.cells.push_back(h);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

void write_results_csv(std::ostream& out, const std::vector<ResultRecord>& rows) {
  out << "agent,scenario,sigma,error_rate,seed,mean_return,std_return,n_episodes,"
         "episodes_trained,disengagement_fraction\n";
  for (const auto& r : rows) {
    out << fmt::format("{},{},{},{},{},{},{},{},{},{}\n", to_string(r.agent),
                       to_string(r.scenario), r.sigma, r.error_rate, r.seed,
                       r.mean_return, r.std_return, r.n_episodes,
                       r.episodes_trained, r.disengagement_fraction);
  }
}

void write_curves_csv(std::ostream& out, const std::vector<CellOutcome>& cells,
                      std::size_t window) {
  out << "agent,scenario,sigma,seed,episode,raw_return,moving_avg\n";
  for (const auto& c : cells) {
    const std::vector<double> smooth = learning_curve(c.training_returns, window);
    for (std::size_t i = 0; i < smooth.size(); ++i) {
      out << fmt::format("{},{},{},{},{},{},{}\n", to_string(c.record.agent),
                         to_string(c.record.scenario), c.record.sigma, c.record.seed,
                         i, c.training_returns[i], smooth[i]);
    }
  }
}

void write_actions_csv(std::ostream& out, const std::vector<ActionTable>& tables) {
  out << "agent,scenario,sigma,bin_low,bin_high,action,frequency,count\n";
  for (const auto& t : tables) {
    for (const auto& bin : t.histogram.bins) {
      for (int a = 0; a < kNumActions; ++a) {
        const auto f = bin.frequency(a);
        out << fmt::format("{},{},{},{},{},{},{},{}\n", to_string(t.agent),
                           to_string(t.scenario), t.sigma, bin.low, bin.high, a,
                           f ? fmt::format("{}", *f) : std::string(),
                           bin.counts[static_cast<std::size_t>(a)]);
      }
    }
  }
}

void write_ttests_csv(std::ostream& out, const std::vector<TTestRow>& rows) {
  out << "comparison,error_rate,effect,t,p\n";
  for (const auto& r : rows) {
    out << fmt::format("{},{},{},{},{}\n", r.comparison, r.error_rate,
                       r.result.effect, r.result.t, r.result.p);
  }
}

void write_heatmap_csv(std::ostream& out, const std::vector<HeatmapCell>& cells) {
  out << "epsilon_d,delta_d,scenario,mean_return,diff\n";
  for (const auto& h : cells) {
    out << fmt::format("{},{},P-H-D,{},{}\n", h.epsilon_d, h.delta_d,
                       h.mean_return_p, h.diff());
    out << fmt::format("{},{},L-H-D,{},{}\n", h.epsilon_d, h.delta_d,
                       h.mean_return_l, h.diff());
  }
}

}  // namespace jitai
