#pragma once

// Physical-activity intervention simulator.
//
// The latent state holds the true binary context, the noisy sensed feature
// and its posterior, plus the habituation and disengagement levels that
// shape reward and termination. Randomness is always drawn from a
// caller-owned stream so that an episode is a pure function of
// (seed, action sequence).

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>

namespace jitai {

using Rng = std::mt19937_64;

struct EnvParams {
  double delta_h = 0.1;    // habituation decay
  double epsilon_h = 0.05; // habituation increment
  double delta_d = 0.1;    // disengagement decay
  double epsilon_d = 0.4;  // disengagement increment
  double rho1 = 50.0;      // surplus for an untailored message
  double rho2 = 200.0;     // surplus for a correctly tailored message
  double sigma = 0.0;      // sensed-feature noise
  double mu0 = 0.0;        // baseline steps in context 0
  double mu1 = 0.0;        // baseline steps in context 1
  int max_steps = 50;
  int k = 2; // time-indicator modulus

  // Throws std::invalid_argument naming the first offending field.
  void validate() const;

  double baseline(int context) const { return context == 0 ? mu0 : mu1; }

  bool operator==(const EnvParams&) const = default;
};

enum class Action : int {
  kNoMessage = 0,
  kUntailored = 1,
  kTailoredContext0 = 2,
  kTailoredContext1 = 3,
};

inline constexpr int kNumActions = 4;

inline constexpr int to_index(Action a) { return static_cast<int>(a); }

// Throws std::out_of_range for values outside {0..3}.
Action action_from_index(int index);

enum class Scenario { kCHD, kLHD, kPHD, kCT, kLT, kPT };

inline constexpr std::array<Scenario, 6> kAllScenarios = {
    Scenario::kCHD, Scenario::kLHD, Scenario::kPHD,
    Scenario::kCT,  Scenario::kLT,  Scenario::kPT};

std::string_view to_string(Scenario s);
std::optional<Scenario> parse_scenario(std::string_view name);
int observation_dim(Scenario s);

enum class Termination { kNone, kHorizon, kDisengagement };

std::string_view to_string(Termination t);

struct EnvState {
  int t = 0;
  int c = 0;
  double x = 0.0;
  double p0 = 0.5;
  int l = 0;
  double h = 0.0;
  double d = 0.0;
  bool terminated = false;

  double p1() const { return 1.0 - p0; }
};

// Agent-visible features. Capacity covers the widest scenario (3).
struct Observation {
  std::array<double, 3> values{};
  int size = 0;

  std::span<const double> features() const {
    return {values.data(), static_cast<std::size_t>(size)};
  }
  double operator[](int i) const { return values[static_cast<std::size_t>(i)]; }
  bool operator==(const Observation&) const = default;
};

struct SensedContext {
  double x;
  double p0;
  int l;
};

struct StepResult {
  EnvState state;
  double reward;
  bool terminated;
  Termination cause;
};

// Bernoulli(0.5).
int sample_context(Rng& rng);

// P(context = 0 | x) for x ~ N(c, sigma^2) under a uniform prior.
// Requires sigma > 0; throws std::domain_error otherwise.
double posterior_p0(double x, double sigma);

// Draws the sensed feature for context c. sigma == 0 is the noiseless
// channel: x = c and the posterior collapses onto c. Exactly one normal
// variate is consumed regardless of sigma.
SensedContext sense_context(int c, double sigma, Rng& rng);

// Probability that the most-likely context differs from the true one,
// Phi(-1 / (2 sigma)). Throws std::domain_error for sigma <= 0.
double expected_error_rate(double sigma);

// Same as expected_error_rate but returns 0 for sigma == 0.
double error_rate_for_sigma(double sigma);

EnvState reset(const EnvParams& params, Rng& rng);

// One decision step. Throws std::logic_error when state is terminated.
StepResult step(const EnvState& state, Action a, const EnvParams& params,
                Rng& rng);

Observation observe(const EnvState& state, Scenario scenario, int k);

}  // namespace jitai
