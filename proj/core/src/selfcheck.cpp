#include "jitai/selfcheck.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <functional>

#include "jitai/agents.hpp"
#include "jitai/env.hpp"
#include "jitai/harness.hpp"
#include "jitai/nn.hpp"
#include "jitai/stats.hpp"
#include "jitai/toy_problems.hpp"

namespace jitai {

bool SelfcheckReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const CheckResult& c) { return c.passed; });
}

namespace {

struct Outcome {
  bool passed;
  std::string detail;
};

using CheckFn = std::function<Outcome(const SelfcheckOptions&)>;

double rel_error(double a, double b) {
  return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1e-6});
}

// Max relative error of `analytic` against central differences of
// `objective` over every parameter of `net`.
double fd_max_error(const nn::Mlp& net, const nn::Gradient& analytic,
                    const std::function<double(const nn::Mlp&)>& objective) {
  constexpr double kStep = 1e-5;
  const std::vector<double> base = nn::flatten(net);
  const std::vector<double> grad = nn::flatten(analytic);
  nn::Mlp probe = net;
  std::vector<double> params = base;
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    params[i] = base[i] + kStep;
    nn::unflatten(probe, params);
    const double up = objective(probe);
    params[i] = base[i] - kStep;
    nn::unflatten(probe, params);
    const double down = objective(probe);
    params[i] = base[i];
    worst = std::max(worst, rel_error(grad[i], (up - down) / (2.0 * kStep)));
  }
  return worst;
}

nn::Mlp random_fixture_net(Rng& rng, int& input_dim, int& output_dim) {
  std::uniform_int_distribution<int> width(4, 16);
  std::uniform_int_distribution<int> depth(1, 2);
  std::uniform_int_distribution<int> io(2, 5);
  input_dim = io(rng);
  output_dim = io(rng);
  std::vector<int> sizes = {input_dim};
  const int hidden_layers = depth(rng);
  for (int i = 0; i < hidden_layers; ++i) sizes.push_back(width(rng));
  sizes.push_back(output_dim);
  nn::Mlp net = nn::make_mlp(sizes, rng);
  // Non-zero biases so no pre-activation sits at exactly zero.
  std::normal_distribution<double> n(0.0, 0.1);
  for (auto& l : net.layers) {
    for (Eigen::Index i = 0; i < l.biases.size(); ++i) l.biases(i) = n(rng);
  }
  return net;
}

std::vector<double> random_vector(Rng& rng, int n) {
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = d(rng);
  return v;
}

Outcome check_logprob_gradient(const SelfcheckOptions& opt) {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(1000 + seed);
    int in = 0, out = 0;
    const nn::Mlp net = random_fixture_net(rng, in, out);
    const std::vector<double> x = random_vector(rng, in);
    const int action = std::uniform_int_distribution<int>(0, out - 1)(rng);
    nn::Gradient g = nn::backward_logprob(net, x, action);
    if (opt.flip_gradient_sign) g *= -1.0;
    worst = std::max(worst, fd_max_error(net, g, [&](const nn::Mlp& m) {
                       return std::log(nn::softmax(nn::forward(m, x))(action));
                     }));
  }
  return {worst < 1e-4, fmt::format("max relative error {:.3e} over 20 fixtures", worst)};
}

Outcome check_value_gradient(const SelfcheckOptions& opt) {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(2000 + seed);
    int in = 0, out = 0;
    const nn::Mlp net = random_fixture_net(rng, in, out);
    const std::vector<double> x = random_vector(rng, in);
    const std::vector<double> target = random_vector(rng, out);
    const Eigen::VectorXd y = nn::forward(net, x);
    std::vector<double> cot(static_cast<std::size_t>(out));
    for (int i = 0; i < out; ++i) cot[static_cast<std::size_t>(i)] = y(i) - target[static_cast<std::size_t>(i)];
    nn::Gradient g = nn::backward_value(net, x, cot);
    if (opt.flip_gradient_sign) g *= -1.0;
    worst = std::max(worst, fd_max_error(net, g, [&](const nn::Mlp& m) {
                       const Eigen::VectorXd f = nn::forward(m, x);
                       double loss = 0.0;
                       for (int i = 0; i < out; ++i) {
                         const double d = f(i) - target[static_cast<std::size_t>(i)];
                         loss += 0.5 * d * d;
                       }
                       return loss;
                     }));
  }
  return {worst < 1e-4, fmt::format("max relative error {:.3e} over 20 fixtures", worst)};
}

Outcome check_posterior_error_rate(const SelfcheckOptions&) {
  constexpr int kSamples = 100000;
  bool ok = true;
  std::string detail;
  for (double sigma : {0.4, 0.5, 0.8, 1.0, 2.0}) {
    Rng rng(static_cast<std::uint64_t>(sigma * 1000));
    int errors = 0;
    for (int i = 0; i < kSamples; ++i) {
      const int c = sample_context(rng);
      if (sense_context(c, sigma, rng).l != c) ++errors;
    }
    const double measured = static_cast<double>(errors) / kSamples;
    const double expected = expected_error_rate(sigma);
    const double se = std::sqrt(expected * (1.0 - expected) / kSamples);
    ok = ok && std::fabs(measured - expected) <= 3.0 * se;
    detail += fmt::format("{}sigma={} measured={:.4f} expected={:.4f}",
                          detail.empty() ? "" : "; ", sigma, measured, expected);
  }
  return {ok, detail};
}

Outcome check_env_invariants(const SelfcheckOptions&) {
  const EnvParams params;
  Rng rng(7);
  std::uniform_int_distribution<int> pick(0, kNumActions - 1);
  for (int ep = 0; ep < 2000; ++ep) {
    EnvParams p = params;
    p.sigma = 0.25 * (ep % 9);
    EnvState s = reset(p, rng);
    int steps = 0;
    while (!s.terminated) {
      const StepResult r = step(s, action_from_index(pick(rng)), p, rng);
      ++steps;
      const auto& n = r.state;
      if (n.h < 0.0 || n.h > 1.0 || n.d < 0.0 || n.d > 1.0 || n.p0 < 0.0 || n.p0 > 1.0) {
        return {false, fmt::format("state out of bounds at episode {}", ep)};
      }
      if (r.reward < p.baseline(s.c) || r.reward > p.baseline(s.c) + p.rho2) {
        return {false, fmt::format("reward {} out of range", r.reward)};
      }
      s = n;
    }
    if (steps > p.max_steps) return {false, "episode exceeded the horizon"};
  }
  return {true, "2000 random-policy episodes within bounds"};
}

// Independent re-statement of the dynamics with context known and sigma 0.
struct OracleState {
  double h = 0.0;
  double d = 0.0;
};

double oracle_best_return(const std::vector<int>& contexts, int t, OracleState s,
                          const EnvParams& p, std::vector<int>& best_seq) {
  if (t == static_cast<int>(contexts.size())) {
    return 0.0;
  }
  double best = -1.0;
  const int c = contexts[static_cast<std::size_t>(t)];
  for (int a = 0; a < kNumActions; ++a) {
    OracleState n = s;
    double r = 0.0;
    if (a == 0) {
      n.h = s.h * (1.0 - p.delta_h);
    } else {
      n.h = std::min(1.0, s.h + p.epsilon_h);
      if (a == 1 || a == c + 2) {
        n.d = s.d * (1.0 - p.delta_d);
      } else {
        n.d = std::min(1.0, s.d + p.epsilon_d);
      }
    }
    if (a == 1) r = (1.0 - n.h) * p.rho1;
    if (a == c + 2) r = (1.0 - n.h) * p.rho2;
    double total = r;
    std::vector<int> sub_best;
    if (n.d < 1.0) {
      total += oracle_best_return(contexts, t + 1, n, p, sub_best);
    }
    if (total > best) {
      best = total;
      best_seq = {a};
      best_seq.insert(best_seq.end(), sub_best.begin(), sub_best.end());
    }
  }
  return best;
}

Outcome check_horizon6_dp(const SelfcheckOptions&) {
  EnvParams p;
  p.max_steps = 6;
  p.sigma = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::vector<int> contexts;
    {
      Rng rng(seed);
      EnvState s = reset(p, rng);
      while (!s.terminated) {
        contexts.push_back(s.c);
        s = step(s, Action::kNoMessage, p, rng).state;
      }
    }
    std::vector<int> best_seq;
    const double best = oracle_best_return(contexts, 0, {}, p, best_seq);
    Rng rng(seed);
    EnvState s = reset(p, rng);
    double total = 0.0;
    for (int a : best_seq) {
      const StepResult r = step(s, action_from_index(a), p, rng);
      total += r.reward;
      s = r.state;
    }
    if (total != best || !s.terminated) {
      return {false, fmt::format("seed {}: oracle {} vs simulator {}", seed, best, total)};
    }
  }
  return {true, "5 context sequences, 4^6 action sequences each, exact match"};
}

Outcome check_reward_to_go(const SelfcheckOptions&) {
  Rng rng(11);
  std::uniform_real_distribution<double> u(0.0, 200.0);
  std::vector<double> r(50);
  for (auto& x : r) x = u(rng);
  const std::vector<double> g = reward_to_go(r, 0.99);
  double worst = 0.0;
  for (std::size_t t = 0; t < r.size(); ++t) {
    double direct = 0.0;
    for (std::size_t k = t; k < r.size(); ++k) {
      direct += std::pow(0.99, static_cast<double>(k - t)) * r[k];
    }
    worst = std::max(worst, std::fabs(direct - g[t]));
  }
  return {worst < 1e-10, fmt::format("max abs error {:.3e}", worst)};
}

Outcome check_welch(const SelfcheckOptions&) {
  const std::array<double, 3> a = {10, 11, 12};
  const std::array<double, 3> b = {0, 1, 2};
  const TTestResult r = welch_t_test(a, b);
  const double expected_t = 10.0 / std::sqrt(2.0 / 3.0);
  const bool ok = std::fabs(r.t - expected_t) < 1e-9 && r.effect == 10.0 &&
                  r.p > 0.0 && r.p < 0.001;
  return {ok, fmt::format("t={:.6f} (expected {:.6f}) p={:.3e}", r.t, expected_t, r.p)};
}

Outcome check_toy_mdp_dqn(const SelfcheckOptions&) {
  const toy::TwoStateMdp mdp;
  const toy::QTable exact = toy::value_iteration(mdp);
  const toy::ToyDqnRun run = toy::train_dqn_on_two_state_mdp(mdp, 20000, 0.2, 5);
  double worst = 0.0;
  bool same_policy = true;
  for (int s = 0; s < 2; ++s) {
    for (int a = 0; a < 2; ++a) worst = std::max(worst, std::fabs(exact[s][a] - run.learned[s][a]));
    same_policy = same_policy && ((exact[s][0] >= exact[s][1]) ==
                                  (run.learned[s][0] >= run.learned[s][1]));
  }
  return {worst <= 0.05 && same_policy,
          fmt::format("max |Q - Q*| = {:.4f}, greedy policy {}", worst,
                      same_policy ? "optimal" : "suboptimal")};
}

Outcome check_reinforce_bandit(const SelfcheckOptions&) {
  std::string detail;
  bool ok = true;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const double p = toy::train_reinforce_on_bandit({0.0, 1.0}, 2000, seed);
    ok = ok && p > 0.95;
    detail += fmt::format("{}seed {}: P(best)={:.4f}", seed ? "; " : "", seed, p);
  }
  return {ok, detail};
}

const std::vector<std::pair<std::string, CheckFn>>& registry() {
  static const std::vector<std::pair<std::string, CheckFn>> checks = {
      {"gradient.logprob", check_logprob_gradient},
      {"gradient.value", check_value_gradient},
      {"env.posterior_error_rate", check_posterior_error_rate},
      {"env.invariants", check_env_invariants},
      {"env.horizon6_dp_oracle", check_horizon6_dp},
      {"agents.reward_to_go", check_reward_to_go},
      {"stats.welch_fixture", check_welch},
      {"agents.toy_mdp_dqn", check_toy_mdp_dqn},
      {"agents.reinforce_bandit", check_reinforce_bandit},
  };
  return checks;
}

}  // namespace

std::vector<std::string> selfcheck_names() {
  std::vector<std::string> names;
  for (const auto& [name, fn] : registry()) names.push_back(name);
  return names;
}

SelfcheckReport run_selfcheck(const SelfcheckOptions& options) {
  SelfcheckReport report;
  for (const auto& [name, fn] : registry()) {
    if (!options.filter.empty() && name.find(options.filter) == std::string::npos) {
      continue;
    }
    CheckResult result;
    result.name = name;
    const auto start = std::chrono::steady_clock::now();
    try {
      const Outcome o = fn(options);
      result.passed = o.passed;
      result.detail = o.detail;
    } catch (const std::exception& e) {
      result.passed = false;
      result.detail = fmt::format("exception: {}", e.what());
    }
    result.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.checks.push_back(std::move(result));
  }
  return report;
}

}  // namespace jitai
