// Acceptance suite: one PASS/FAIL line per criterion.
//
//   jitai_acceptance [--jobs N] [--cli PATH] [--only 1,4,9]
//
// Trained cells use the desk budget profile and are shared between
// criteria, so each (agent, scenario, sigma, seed) trains once.

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

#include "jitai/config.hpp"
#include "jitai/harness.hpp"
#include "jitai/selfcheck.hpp"
#include "jitai/stats.hpp"

namespace {

using namespace jitai;
using Clock = std::chrono::steady_clock;
namespace fs = std::filesystem;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Verdict {
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

// ---------------------------------------------------------------------------
// Trained-cell cache

class CellCache {
 public:
  CellCache(ExperimentConfig base, int jobs) : base_(std::move(base)), jobs_(jobs) {}

  CellSpec cell(AgentKind kind, Scenario scenario, double sigma, std::uint64_t seed) const {
    CellSpec c;
    c.agent = base_.agent.with_kind(kind);
    c.env = base_.env;
    c.env.sigma = sigma;
    c.scenario = scenario;
    c.seed = seed;
    c.eval_episodes = base_.eval_episodes;
    c.master_seed = base_.master_seed;
    return c;
  }

  std::vector<CellSpec> grid(std::initializer_list<AgentKind> kinds,
                             std::initializer_list<Scenario> scenarios,
                             const std::vector<double>& sigmas) const {
    std::vector<CellSpec> out;
    for (AgentKind k : kinds)
      for (Scenario s : scenarios)
        for (double sigma : sigmas)
          for (std::uint64_t seed : base_.seeds) out.push_back(cell(k, s, sigma, seed));
    return out;
  }

  // Trains whatever is missing; returns the summed per-cell training time
  // of the requested cells.
  double ensure(const std::vector<CellSpec>& cells) {
    std::vector<CellSpec> todo;
    std::set<std::string> queued;
    for (const auto& c : cells) {
      const std::string k = c.describe();
      if (!done_.contains(k) && queued.insert(k).second) todo.push_back(c);
    }
    std::atomic<std::size_t> next{0};
    std::mutex m;
    auto worker = [&] {
      for (std::size_t i = next++; i < todo.size(); i = next++) {
        const auto start = Clock::now();
        CellOutcome o = run_cell(todo[i]);
        const double secs = seconds_since(start);
        std::lock_guard lock(m);
        std::cerr << fmt::format("  trained {} -> mean_return={:.1f} ({:.1f}s)\n",
                                 todo[i].describe(), o.record.mean_return, secs);
        done_.emplace(todo[i].describe(), Entry{std::move(o), secs});
      }
    };
    const int n = std::clamp(jobs_, 1, std::max(1, static_cast<int>(todo.size())));
    {
      std::vector<std::jthread> pool;
      for (int t = 1; t < n; ++t) pool.emplace_back(worker);
      worker();
    }
    double total = 0.0;
    for (const auto& k : unique_keys(cells)) total += done_.at(k).seconds;
    return total;
  }

  const CellOutcome& get(const CellSpec& c) const { return done_.at(c.describe()).outcome; }

  double mean_return(AgentKind k, Scenario s, double sigma) const {
    double sum = 0.0;
    for (std::uint64_t seed : base_.seeds) sum += get(cell(k, s, sigma, seed)).record.mean_return;
    return sum / static_cast<double>(base_.seeds.size());
  }

  std::vector<double> returns(AgentKind k, Scenario s, double sigma) const {
    std::vector<double> out;
    for (std::uint64_t seed : base_.seeds) out.push_back(get(cell(k, s, sigma, seed)).record.mean_return);
    return out;
  }

  const ExperimentConfig& base() const { return base_; }

 private:
  struct Entry {
    CellOutcome outcome;
    double seconds;
  };
  static std::set<std::string> unique_keys(const std::vector<CellSpec>& cells) {
    std::set<std::string> keys;
    for (const auto& c : cells) keys.insert(c.describe());
    return keys;
  }

  ExperimentConfig base_;
  int jobs_;
  std::map<std::string, Entry> done_;
};

std::string join(const std::vector<double>& xs, int precision = 1) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ",";
    s += fmt::format("{:.{}f}", xs[i], precision);
  }
  return "[" + s + "]";
}

constexpr double kMinutes = 60.0;

// ---------------------------------------------------------------------------
// Criteria

Verdict c1_error_curve() {
  const auto start = Clock::now();
  const std::vector<double> sigmas{0.4, 0.5, 0.8, 1.0, 2.0};
  const int n = 100000;
  bool ok = true;
  std::string detail;
  for (double sigma : sigmas) {
    Rng rng(0xC0FFEE + static_cast<std::uint64_t>(sigma * 100));
    int wrong = 0;
    for (int i = 0; i < n; ++i) {
      const int c = sample_context(rng);
      wrong += sense_context(c, sigma, rng).l != c;
    }
    const double measured = wrong / static_cast<double>(n);
    const double expected = expected_error_rate(sigma);
    ok = ok && std::abs(measured - expected) <= 0.005;
    detail += fmt::format("sigma={} measured={:.4f} expected={:.4f}; ", sigma, measured, expected);
  }
  const double lo = expected_error_rate(0.4), hi = expected_error_rate(2.0);
  ok = ok && std::abs(lo - 0.1056) < 1e-4 && std::abs(hi - 0.4013) < 1e-4;
  detail += fmt::format("endpoints {:.4f}..{:.4f}", lo, hi);
  const double secs = seconds_since(start);
  ok = ok && secs < 10.0;
  return {ok, detail, secs};
}

Verdict c2_p_beats_l(CellCache& cache) {
  const double secs = cache.ensure(
      cache.grid({AgentKind::kDqn, AgentKind::kReinforce}, {Scenario::kPHD, Scenario::kLHD}, {0.5}));
  bool ok = true;
  std::string detail;
  for (AgentKind k : {AgentKind::kDqn, AgentKind::kReinforce}) {
    const auto p = cache.returns(k, Scenario::kPHD, 0.5);
    const auto l = cache.returns(k, Scenario::kLHD, 0.5);
    const TTestResult t = welch_t_test(p, l);
    ok = ok && t.effect > 0.0 && t.p < 0.1;
    detail += fmt::format("{}: P={} L={} effect={:.1f} p={:.3g}; ", to_string(k), join(p), join(l),
                          t.effect, t.p);
  }
  ok = ok && secs < 30.0 * kMinutes;
  return {ok, detail + fmt::format("train {:.0f}s", secs), secs};
}

Verdict c3_partial_observability(CellCache& cache) {
  std::vector<CellSpec> cells = cache.grid({AgentKind::kDqn, AgentKind::kReinforce}, {Scenario::kPT}, {0.5, 1.0});
  const auto more = cache.grid({AgentKind::kDqn, AgentKind::kReinforce}, {Scenario::kCT, Scenario::kCHD}, {0.0});
  cells.insert(cells.end(), more.begin(), more.end());
  const double secs = cache.ensure(cells);
  bool ok = true;
  std::string detail;
  for (double sigma : {0.5, 1.0}) {
    const auto r = cache.returns(AgentKind::kReinforce, Scenario::kPT, sigma);
    const auto d = cache.returns(AgentKind::kDqn, Scenario::kPT, sigma);
    const TTestResult t = welch_t_test(r, d);
    ok = ok && t.effect > 0.0 && t.p < 0.1;
    detail += fmt::format("P-T sigma={}: reinforce={} dqn={} effect={:.1f} p={:.3g}; ", sigma, join(r),
                          join(d), t.effect, t.p);
  }
  const double dqn_ratio = cache.mean_return(AgentKind::kDqn, Scenario::kCT, 0.0) /
                           cache.mean_return(AgentKind::kDqn, Scenario::kCHD, 0.0);
  const double rf_ratio = cache.mean_return(AgentKind::kReinforce, Scenario::kCT, 0.0) /
                          cache.mean_return(AgentKind::kReinforce, Scenario::kCHD, 0.0);
  ok = ok && dqn_ratio <= 0.6 && rf_ratio >= 0.8;
  detail += fmt::format("C-T/C-H-D at sigma=0: dqn={:.3f} (<=0.6) reinforce={:.3f} (>=0.8); ", dqn_ratio,
                        rf_ratio);
  ok = ok && secs < 45.0 * kMinutes;
  return {ok, detail + fmt::format("train {:.0f}s", secs), secs};
}

Verdict c4_zero_error(CellCache& cache) {
  const double secs = cache.ensure(cache.grid({AgentKind::kDqn, AgentKind::kReinforce}, {Scenario::kCHD}, {0.0}));
  const auto start = Clock::now();
  EnvParams env = cache.base().env;
  env.sigma = 0.0;
  double best_constant = 0.0;
  for (int a = 0; a < kNumActions; ++a) {
    Rng rng(1000 + a);
    best_constant = std::max(
        best_constant, evaluate(constant_policy(action_from_index(a)), env, Scenario::kCHD, 1000, rng).mean_return);
  }
  Rng rng(7);
  const double oracle = run_episode(alternating_oracle_policy(), env, Scenario::kCHD, rng).total_return;
  bool ok = true;
  std::string detail = fmt::format("best constant={:.1f} (x5={:.1f}) alternating oracle={:.3f}; ", best_constant,
                                   5.0 * best_constant, oracle);
  for (AgentKind k : {AgentKind::kDqn, AgentKind::kReinforce}) {
    const double m = cache.mean_return(k, Scenario::kCHD, 0.0);
    ok = ok && m >= 5.0 * best_constant && m > oracle;
    detail += fmt::format("{}={:.1f} seeds={}; ", to_string(k), m, join(cache.returns(k, Scenario::kCHD, 0.0)));
  }
  const double total = secs + seconds_since(start);
  ok = ok && total < 20.0 * kMinutes;
  return {ok, detail + fmt::format("train {:.0f}s", secs), total};
}

Verdict c5_monotone(CellCache& cache) {
  const std::vector<double> sigmas{0.0, 0.4, 0.5, 0.8, 1.0, 2.0};
  const double secs = cache.ensure(
      cache.grid({AgentKind::kDqn, AgentKind::kReinforce}, {Scenario::kCHD, Scenario::kLHD, Scenario::kPHD}, sigmas));
  bool ok = true;
  std::string detail;
  for (AgentKind k : {AgentKind::kDqn, AgentKind::kReinforce}) {
    for (Scenario s : {Scenario::kCHD, Scenario::kLHD, Scenario::kPHD}) {
      std::vector<double> curve;
      for (double sigma : sigmas) curve.push_back(cache.mean_return(k, s, sigma));
      int violations = 0;
      for (std::size_t i = 0; i + 1 < curve.size(); ++i) violations += curve[i + 1] > curve[i];
      ok = ok && violations <= 1;
      detail += fmt::format("{} {}: {} violations={}; ", to_string(k), to_string(s), join(curve), violations);
    }
  }
  return {ok, detail + fmt::format("train {:.0f}s", secs), secs};
}

Verdict c6_gradients() {
  const auto start = Clock::now();
  SelfcheckOptions opt;
  opt.filter = "gradient.";
  const SelfcheckReport r = run_selfcheck(opt);
  std::string detail;
  for (const auto& c : r.checks) detail += fmt::format("{}: {}; ", c.name, c.detail);
  const double secs = seconds_since(start);
  return {r.checks.size() == 2 && r.all_passed() && secs < 5.0, detail, secs};
}

Verdict c7_oracles() {
  const auto start = Clock::now();
  bool ok = true;
  std::string detail;

  Rng rng(99);
  std::uniform_real_distribution<double> u(0.0, 200.0);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> r(50);
    for (double& x : r) x = u(rng);
    const std::vector<double> g = reward_to_go(r, 0.99);
    for (std::size_t t = 0; t < r.size(); ++t) {
      double s = 0.0;
      for (std::size_t k = t; k < r.size(); ++k) s += std::pow(0.99, double(k - t)) * r[k];
      worst = std::max(worst, std::abs(s - g[t]));
    }
  }
  ok = ok && worst <= 1e-10;
  detail += fmt::format("reward_to_go max err={:.2e}; ", worst);

  const std::vector<double> a{10, 11, 12}, b{0, 1, 2};
  const TTestResult t = welch_t_test(a, b);
  const double t_err = std::abs(t.t - 10.0 / std::sqrt(2.0 / 3.0));
  ok = ok && t_err <= 1e-9;
  detail += fmt::format("welch t={:.9f} err={:.1e}; ", t.t, t_err);

  for (const char* name : {"env.horizon6_dp_oracle", "agents.toy_mdp_dqn"}) {
    SelfcheckOptions opt;
    opt.filter = name;
    const SelfcheckReport r = run_selfcheck(opt);
    ok = ok && r.checks.size() == 1 && r.all_passed();
    for (const auto& c : r.checks) detail += fmt::format("{}: {}; ", c.name, c.detail);
  }
  return {ok, detail, seconds_since(start)};
}

Verdict c8_action_distribution(CellCache& cache) {
  const CellSpec spec = cache.cell(AgentKind::kReinforce, Scenario::kPHD, 0.5, cache.base().seeds.front());
  const double secs = cache.ensure({spec});
  const CellOutcome& o = cache.get(spec);
  Rng rng(cell_stream_seed(spec, 4));
  const ActionHistogram h =
      action_distribution(*o.agent, spec.env, spec.scenario, cache.base().action_episodes, rng);
  auto tailored = [&](const ActionHistogram::Bin& bin) -> std::optional<double> {
    const auto f2 = bin.frequency(2), f3 = bin.frequency(3);
    if (!f2 || !f3) return std::nullopt;
    return *f2 + *f3;
  };
  const auto low = tailored(h.bins.front()), high = tailored(h.bins.back());
  std::string detail;
  for (const auto& bin : h.bins) {
    const auto f = tailored(bin);
    detail += fmt::format("[{},{}) n={} tailored={}; ", bin.low, bin.high, bin.total,
                          f ? fmt::format("{:.3f}", *f) : std::string("absent"));
  }
  const bool ok = low && high && *high - *low >= 0.15;
  return {ok, detail + fmt::format("train {:.0f}s", secs), secs};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Runs the CLI and returns the CSV files it wrote, concatenated with names.
std::optional<std::string> cli_outputs(const std::string& cli, const std::string& args, const fs::path& out) {
  fs::remove_all(out);
  const std::string cmd = fmt::format("\"{}\" {} --out \"{}\" > /dev/null 2>&1", cli, args, out.string());
  if (std::system(cmd.c_str()) != 0) return std::nullopt;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(out)) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::string all;
  for (const auto& f : files) all += f.filename().string() + "\n" + slurp(f);
  return all;
}

Verdict c9_reproducibility(const std::string& cli) {
  const auto start = Clock::now();
  bool ok = true;
  std::string detail;

  // Library level: same cells, different job counts and reruns.
  ExperimentConfig c = profile_defaults(Profile::kDesk);
  c.agent.reinforce.episodes = 5;
  c.agent.reinforce.m_trajectories = 5;
  c.agent.dqn.episodes = 5;
  c.scenarios = {Scenario::kPHD, Scenario::kLT};
  c.sigmas = {0.0, 0.5};
  c.seeds = {0, 1};
  c.eval_episodes = 20;
  auto csv = [&](int jobs) {
    std::string s;
    for (AgentKind k : {AgentKind::kReinforce, AgentKind::kDqn}) {
      ExperimentConfig ck = c;
      ck.agent = c.agent.with_kind(k);
      const SweepResult r = run_experiment(ck, jobs);
      std::ostringstream a, b;
      write_results_csv(a, records_of(r.cells));
      write_curves_csv(b, r.cells);
      s += a.str() + b.str();
    }
    return s;
  };
  const std::string first = csv(1);
  const bool lib_rerun = first == csv(1);
  const bool lib_jobs = first == csv(3);
  ok = ok && lib_rerun && lib_jobs;
  detail += fmt::format("library rerun={} jobs1-vs-3={}; ", lib_rerun ? "identical" : "DIFFERENT",
                        lib_jobs ? "identical" : "DIFFERENT");

  if (cli.empty()) {
    return {false, detail + "CLI path not given", seconds_since(start)};
  }
  const fs::path tmp = fs::temp_directory_path() / fmt::format("jitai_acceptance_{}", ::getpid());
  fs::create_directories(tmp);
  const fs::path cfg = tmp / "tiny.ini";
  {
    std::ofstream f(cfg);
    f << "[env]\n[agent]\nhidden = 16\nepisodes = 4\nm_trajectories = 5\nbatch_size = 16\n"
         "[experiment]\nscenarios = P-H-D, P-T\nsigmas = 0, 0.5\nseeds = 0, 1\neval_episodes = 20\n"
         "action_episodes = 10\nepsilon_d_grid = 0.2, 0.4\ndelta_d_grid = 0.1\n";
  }
  const std::vector<std::string> invocations = {
      "run", "run --set agent.kind=dqn", "curve", "actions", "heatmap --set experiment.seeds=0",
      "sweep --set agent.kind=dqn --set experiment.seeds=0 --set experiment.sigmas=0"};
  for (const auto& sub : invocations) {
    auto args = [&](int jobs) {
      return fmt::format("{} --config \"{}\" --seed 5 --jobs {}", sub, cfg.string(), jobs);
    };
    const auto a = cli_outputs(cli, args(1), tmp / "a");
    const auto b = cli_outputs(cli, args(1), tmp / "b");
    const auto c2 = cli_outputs(cli, args(2), tmp / "c");
    const bool rerun = a && b && !a->empty() && *a == *b;
    const bool jobs = a && c2 && *a == *c2;
    ok = ok && rerun && jobs;
    detail += fmt::format("'{}': rerun={} jobs1-vs-2={}; ", sub, rerun ? "identical" : "DIFFERENT",
                          jobs ? "identical" : "DIFFERENT");
  }
  fs::remove_all(tmp);
  return {ok, detail, seconds_since(start)};
}

}  // namespace

int main(int argc, char** argv) {
  int jobs = 1;
  std::string cli;
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--jobs" && i + 1 < argc) {
      jobs = std::max(1, std::atoi(argv[++i]));
    } else if (a == "--cli" && i + 1 < argc) {
      cli = argv[++i];
    } else if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string item; std::getline(ss, item, ',');) only.insert(std::atoi(item.c_str()));
    } else {
      std::cerr << "usage: jitai_acceptance [--jobs N] [--cli PATH] [--only 1,2,...]\n";
      return 2;
    }
  }

  CellCache cache(parse_config("[env]\n[agent]\n", Profile::kDesk), jobs);

  struct Criterion {
    int id;
    const char* title;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "context-inference error curve", [] { return c1_error_curve(); }},
      {2, "P-H-D beats L-H-D at sigma=0.5 for both agents", [&] { return c2_p_beats_l(cache); }},
      {3, "partial-observability gap", [&] { return c3_partial_observability(cache); }},
      {4, "zero-error sanity against baselines", [&] { return c4_zero_error(cache); }},
      {5, "monotone degradation in sigma", [&] { return c5_monotone(cache); }},
      {6, "gradient correctness", [] { return c6_gradients(); }},
      {7, "oracle equivalences", [] { return c7_oracles(); }},
      {8, "action distribution by confidence", [&] { return c8_action_distribution(cache); }},
      {9, "byte-identical reruns", [&] { return c9_reproducibility(cli); }},
  };

  int failures = 0;
  std::vector<std::string> summary;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.contains(c.id)) continue;
    std::cerr << fmt::format("criterion {}: {}\n", c.id, c.title);
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, fmt::format("exception: {}", e.what()), 0.0};
    }
    failures += !v.passed;
    const std::string line =
        fmt::format("{} [{}] {} ({:.1f}s) | {}", v.passed ? "PASS" : "FAIL", c.id, c.title, v.seconds, v.detail);
    std::cout << line << std::endl;
    summary.push_back(line.substr(0, line.find(" | ")));
  }
  std::cout << "---\n";
  for (const auto& s : summary) std::cout << s << "\n";
  std::cout << fmt::format("{} of {} criteria passed\n", summary.size() - failures, summary.size());
  return failures == 0 ? 0 : 1;
}
