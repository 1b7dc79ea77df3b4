#include "jitai/toy_problems.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace jitai::toy {

double TwoStateMdp::reward(int state, int action) {
  if (state == 0) return 0.0;
  return action == 0 ? 1.0 : 0.3;
}

Observation TwoStateMdp::observation(int state) {
  Observation o;
  o.values = {state == 0 ? 1.0 : 0.0, state == 1 ? 1.0 : 0.0, 0.0};
  o.size = 2;
  return o;
}

QTable value_iteration(const TwoStateMdp& mdp, double tol) {
  QTable q{};
  for (int iter = 0; iter < 100000; ++iter) {
    QTable next{};
    double change = 0.0;
    for (int s = 0; s < TwoStateMdp::kStates; ++s) {
      for (int a = 0; a < TwoStateMdp::kActions; ++a) {
        const int s2 = TwoStateMdp::next_state(s, a);
        const double v2 = std::max(q[s2][0], q[s2][1]);
        next[s][a] = TwoStateMdp::reward(s, a) + mdp.gamma * v2;
        change = std::max(change, std::fabs(next[s][a] - q[s][a]));
      }
    }
    q = next;
    if (change < tol) break;
  }
  return q;
}

ToyDqnRun train_dqn_on_two_state_mdp(const TwoStateMdp& mdp, std::int64_t steps,
                                     double epsilon, std::uint64_t seed) {
  DqnConfig cfg;
  cfg.hidden = 32;
  cfg.lr = 1e-3;
  cfg.gamma = mdp.gamma;
  cfg.batch_size = 64;
  cfg.replay_capacity = 20000;
  cfg.eps_start = epsilon;
  cfg.eps_end = epsilon;
  cfg.eps_decrement = 0.0;
  cfg.target_sync = 100;
  cfg.num_actions = TwoStateMdp::kActions;

  Rng rng(seed);
  DqnAgent agent(2, cfg, rng);
  int state = 0;
  for (std::int64_t i = 0; i < steps; ++i) {
    const Observation obs = TwoStateMdp::observation(state);
    const int a = agent.act(obs, ActMode::kTrainSample, rng);
    const int s2 = TwoStateMdp::next_state(state, a);
    agent.remember({obs, a, TwoStateMdp::reward(state, a),
                    TwoStateMdp::observation(s2), false});
    agent.update(rng);
    state = s2;
  }
  ToyDqnRun run;
  run.steps = steps;
  for (int s = 0; s < TwoStateMdp::kStates; ++s) {
    const Eigen::VectorXd q = agent.q_values(TwoStateMdp::observation(s));
    for (int a = 0; a < TwoStateMdp::kActions; ++a) run.learned[s][a] = q(a);
  }
  return run;
}

double train_reinforce_on_bandit(std::array<double, 2> payoffs, int episodes,
                                 std::uint64_t seed) {
  ReinforceConfig cfg;
  cfg.hidden = 16;
  cfg.lr = 1e-2;
  cfg.gamma = 1.0;
  cfg.m_trajectories = 10;
  cfg.num_actions = 2;

  Rng rng(seed);
  ReinforceAgent agent(1, cfg, rng);
  Observation obs;
  obs.values = {1.0, 0.0, 0.0};
  obs.size = 1;
  std::vector<Trajectory> batch(static_cast<std::size_t>(cfg.m_trajectories));
  for (int done = 0; done < episodes; done += cfg.m_trajectories) {
    for (auto& tr : batch) {
      tr = Trajectory{};
      const int a = agent.act(obs, ActMode::kTrainSample, rng);
      tr.append(obs, a, payoffs[static_cast<std::size_t>(a)]);
      tr.cause = Termination::kHorizon;
    }
    agent.update(batch);
  }
  return nn::softmax(nn::forward(agent.policy(), obs.features()))(1);
}

}  // namespace jitai::toy
