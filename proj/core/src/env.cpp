#include "jitai/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "jitai/stats.hpp"

namespace jitai {

namespace {

void require(bool ok, const char* field, const char* rule) {
  if (!ok) {
    throw std::invalid_argument(std::string("EnvParams.") + field + " must be " +
                                rule);
  }
}

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

}  // namespace

void EnvParams::validate() const {
  require(in_unit(delta_h), "delta_h", "in [0,1]");
  require(epsilon_h > 0.0 && epsilon_h <= 1.0, "epsilon_h", "in (0,1]");
  require(in_unit(delta_d), "delta_d", "in [0,1]");
  require(epsilon_d > 0.0 && epsilon_d <= 1.0, "epsilon_d", "in (0,1]");
  require(rho1 >= 0.0, "rho1", ">= 0");
  require(rho2 >= 0.0, "rho2", ">= 0");
  require(sigma >= 0.0 && std::isfinite(sigma), "sigma", "finite and >= 0");
  require(mu0 >= 0.0, "mu0", ">= 0");
  require(mu1 >= 0.0, "mu1", ">= 0");
  require(max_steps >= 1, "max_steps", ">= 1");
  require(k >= 1, "k", ">= 1");
}

Action action_from_index(int index) {
  if (index < 0 || index >= kNumActions) {
    throw std::out_of_range("action index " + std::to_string(index) +
                            " outside [0,3]");
  }
  return static_cast<Action>(index);
}

std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::kCHD: return "C-H-D";
    case Scenario::kLHD: return "L-H-D";
    case Scenario::kPHD: return "P-H-D";
    case Scenario::kCT: return "C-T";
    case Scenario::kLT: return "L-T";
    case Scenario::kPT: return "P-T";
  }
  return "?";
}

std::optional<Scenario> parse_scenario(std::string_view name) {
  for (Scenario s : kAllScenarios) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

int observation_dim(Scenario s) {
  switch (s) {
    case Scenario::kCHD:
    case Scenario::kLHD:
    case Scenario::kPHD:
      return 3;
    case Scenario::kCT:
    case Scenario::kLT:
    case Scenario::kPT:
      return 2;
  }
  return 0;
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::kNone: return "none";
    case Termination::kHorizon: return "horizon";
    case Termination::kDisengagement: return "disengagement";
  }
  return "?";
}

int sample_context(Rng& rng) { return static_cast<int>(rng() >> 63); }

double posterior_p0(double x, double sigma) {
  if (!(sigma > 0.0)) {
    throw std::domain_error("posterior_p0 requires sigma > 0");
  }
  // log p1/p0 = ((x-0)^2 - (x-1)^2) / (2 sigma^2) = (2x - 1) / (2 sigma^2)
  const double log_odds_1 = (2.0 * x - 1.0) / (2.0 * sigma * sigma);
  return 1.0 / (1.0 + std::exp(log_odds_1));
}

SensedContext sense_context(int c, double sigma, Rng& rng) {
  std::normal_distribution<double> noise(0.0, 1.0);
  const double z = noise(rng);
  if (sigma == 0.0) {
    const double x = static_cast<double>(c);
    return {x, c == 0 ? 1.0 : 0.0, c};
  }
  const double x = static_cast<double>(c) + sigma * z;
  const double p0 = posterior_p0(x, sigma);
  return {x, p0, p0 >= 0.5 ? 0 : 1};
}

double expected_error_rate(double sigma) {
  if (!(sigma > 0.0)) {
    throw std::domain_error("expected_error_rate requires sigma > 0");
  }
  return std_normal_cdf(-1.0 / (2.0 * sigma));
}

double error_rate_for_sigma(double sigma) {
  return sigma == 0.0 ? 0.0 : expected_error_rate(sigma);
}

EnvState reset(const EnvParams& params, Rng& rng) {
  EnvState s;
  s.c = sample_context(rng);
  const SensedContext sensed = sense_context(s.c, params.sigma, rng);
  s.x = sensed.x;
  s.p0 = sensed.p0;
  s.l = sensed.l;
  return s;
}

StepResult step(const EnvState& state, Action a, const EnvParams& params,
                Rng& rng) {
  if (state.terminated) {
    throw std::logic_error("step called on a terminated episode");
  }
  const int ai = to_index(a);
  if (ai < 0 || ai >= kNumActions) {
    throw std::out_of_range("invalid action");
  }
  const bool send = ai != 0;
  const bool correct_tailoring = ai == state.c + 2;
  const bool wrong_tailoring = ai >= 2 && !correct_tailoring;

  EnvState next = state;
  next.h = send ? std::min(1.0, state.h + params.epsilon_h)
                : (1.0 - params.delta_h) * state.h;
  if (!send) {
    next.d = state.d;
  } else if (wrong_tailoring) {
    next.d = std::min(1.0, state.d + params.epsilon_d);
  } else {
    next.d = (1.0 - params.delta_d) * state.d;
  }

  double reward = params.baseline(state.c);
  if (ai == 1) {
    reward += (1.0 - next.h) * params.rho1;
  } else if (correct_tailoring) {
    reward += (1.0 - next.h) * params.rho2;
  }

  next.t = state.t + 1;
  Termination cause = Termination::kNone;
  if (next.d >= 1.0) {
    cause = Termination::kDisengagement;
  } else if (next.t >= params.max_steps) {
    cause = Termination::kHorizon;
  }
  next.terminated = cause != Termination::kNone;

  if (!next.terminated) {
    next.c = sample_context(rng);
    const SensedContext sensed = sense_context(next.c, params.sigma, rng);
    next.x = sensed.x;
    next.p0 = sensed.p0;
    next.l = sensed.l;
  }
  return {next, reward, next.terminated, cause};
}

Observation observe(const EnvState& state, Scenario scenario, int k) {
  if (k < 1) throw std::invalid_argument("observe: k must be >= 1");
  const double indicator = static_cast<double>(state.t % k);
  Observation o;
  switch (scenario) {
    case Scenario::kCHD: o.values = {double(state.c), state.h, state.d}; break;
    case Scenario::kLHD: o.values = {double(state.l), state.h, state.d}; break;
    case Scenario::kPHD: o.values = {state.p0, state.h, state.d}; break;
    case Scenario::kCT: o.values = {double(state.c), indicator, 0.0}; break;
    case Scenario::kLT: o.values = {double(state.l), indicator, 0.0}; break;
    case Scenario::kPT: o.values = {state.p0, indicator, 0.0}; break;
  }
  o.size = observation_dim(scenario);
  return o;
}

}  // namespace jitai
