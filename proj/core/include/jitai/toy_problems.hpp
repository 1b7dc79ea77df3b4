#pragma once

// Small problems with known solutions, used to validate the learners
// outside the intervention simulator.

#include <array>
#include <cstdint>

#include "jitai/agents.hpp"

namespace jitai::toy {

// Two states, two actions; action a moves deterministically to state a.
// Rewards: r(0,*) = 0, r(1,0) = 1, r(1,1) = 0.3. Non-terminating.
struct TwoStateMdp {
  static constexpr int kStates = 2;
  static constexpr int kActions = 2;
  double gamma = 0.9;

  static double reward(int state, int action);
  static int next_state(int /*state*/, int action) { return action; }
  static Observation observation(int state);
};

using QTable = std::array<std::array<double, 2>, 2>;

// Synchronous value iteration until the sup-norm change drops below tol.
QTable value_iteration(const TwoStateMdp& mdp, double tol = 1e-12);

struct ToyDqnRun {
  QTable learned{};
  std::int64_t steps = 0;
};

// Trains a DqnAgent for `steps` environment steps with fixed exploration.
ToyDqnRun train_dqn_on_two_state_mdp(const TwoStateMdp& mdp, std::int64_t steps,
                                     double epsilon, std::uint64_t seed);

// One-step bandit with deterministic payoffs; returns P(action 1) under the
// trained policy after `episodes` single-step episodes.
double train_reinforce_on_bandit(std::array<double, 2> payoffs, int episodes,
                                 std::uint64_t seed);

}  // namespace jitai::toy
