#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "jitai/env.hpp"
#include "jitai/nn.hpp"
#include "jitai/replay_buffer.hpp"

namespace jitai {

enum class ActMode { kTrainSample, kGreedyEval };

// Common act interface used by the experiment harness. Actions are plain
// indices so the learners also run on toy problems with fewer actions.
class Agent {
 public:
  virtual ~Agent() = default;
  virtual int act(const Observation& obs, ActMode mode, Rng& rng) = 0;
  virtual int input_dim() const = 0;
  virtual int num_actions() const = 0;
  virtual std::string_view kind() const = 0;
};

struct Trajectory {
  std::vector<Observation> observations;
  std::vector<int> actions;
  std::vector<double> rewards;
  double total_return = 0.0;
  Termination cause = Termination::kNone;

  std::size_t size() const { return actions.size(); }
  void append(const Observation& obs, int action, double reward) {
    observations.push_back(obs);
    actions.push_back(action);
    rewards.push_back(reward);
    total_return += reward;
  }
};

// G_t = sum_{k>=t} gamma^(k-t) r_k. Throws std::invalid_argument unless
// gamma is in (0,1]; an empty input yields an empty output.
std::vector<double> reward_to_go(std::span<const double> rewards, double gamma);

// Draws an action from softmax(forward(policy, obs)).
int sample_action(const nn::Mlp& policy, const Observation& obs, Rng& rng);

// Q = V + A - mean(A).
Eigen::VectorXd dueling_q(double value, const Eigen::VectorXd& advantages);

// Uniform-random action with probability epsilon, else the lowest-index
// argmax. One uniform variate is always consumed.
int epsilon_greedy(const Eigen::VectorXd& q, double epsilon, Rng& rng);

// Lowest-index argmax.
int greedy_action(const Eigen::VectorXd& q);

struct ReinforceConfig {
  int hidden = 128;
  double lr = 6e-4;
  double gamma = 0.99;
  int m_trajectories = 50;
  int episodes = 15000;  // gradient steps, each over m_trajectories rollouts
  int num_actions = kNumActions;

  void validate() const;
};

// Monte Carlo policy gradient with a one-hidden-layer softmax policy.
class ReinforceAgent final : public Agent {
 public:
  ReinforceAgent(int input_dim, const ReinforceConfig& config, Rng& init_rng);

  // Samples from the policy in both modes.
  int act(const Observation& obs, ActMode mode, Rng& rng) override;
  int input_dim() const override { return policy_.input_dim(); }
  int num_actions() const override { return policy_.output_dim(); }
  std::string_view kind() const override { return "reinforce"; }

  // Ascent direction (1/M) sum_i sum_t grad log pi(a_t|s_t) G_t.
  // Throws std::invalid_argument on an empty batch.
  nn::Gradient policy_gradient(std::span<const Trajectory> batch) const;

  // One Adam ascent step on the batch; returns the gradient norm.
  double update(std::span<const Trajectory> batch);

  const ReinforceConfig& config() const { return config_; }
  const nn::Mlp& policy() const { return policy_; }
  nn::Mlp& mutable_policy() { return policy_; }
  const nn::AdamState& optimizer() const { return opt_; }

 private:
  ReinforceConfig config_;
  nn::Mlp policy_;
  nn::AdamState opt_;
};

// Bootstrap targets r + gamma * max_a Q_target(s', a), cut at terminals.
// `target` is a dueling network whose output is [V, A_0..A_{n-1}].
std::vector<double> td_targets(std::span<const Transition> batch,
                               const nn::Mlp& target, double gamma);

struct DqnLoss {
  double loss = 0.0;
  nn::Gradient gradient;
};

// Mean squared TD error of `online` against fixed targets, with its
// parameter gradient.
DqnLoss dqn_loss(const nn::Mlp& online, std::span<const Transition> batch,
                 std::span<const double> targets);

struct DqnConfig {
  int hidden = 128;
  double lr = 5e-4;
  double gamma = 0.99;
  int batch_size = 64;
  std::size_t replay_capacity = 100000;
  double eps_start = 1.0;
  double eps_end = 0.01;
  double eps_decrement = 0.001;
  int target_sync = 1000;
  int episodes = 1000;
  int num_actions = kNumActions;

  void validate() const;
};

// Dueling DQN. The shared two-hidden-layer trunk feeds one linear layer
// of width 1 + num_actions holding the V and A heads side by side.
class DqnAgent final : public Agent {
 public:
  DqnAgent(int input_dim, const DqnConfig& config, Rng& init_rng);

  // Epsilon-greedy when training, greedy when evaluating.
  int act(const Observation& obs, ActMode mode, Rng& rng) override;
  int input_dim() const override { return online_.input_dim(); }
  int num_actions() const override { return config_.num_actions; }
  std::string_view kind() const override { return "dqn"; }

  Eigen::VectorXd q_values(const Observation& obs) const;

  void remember(const Transition& t) { replay_.push(t); }

  // Samples a batch and applies one regression step. Returns nullopt
  // without touching any state while the buffer holds fewer than
  // batch_size transitions.
  std::optional<double> update(Rng& rng);

  // The step body on a caller-supplied batch (also used by update).
  double update_on_batch(std::span<const Transition> batch);

  double epsilon() const { return epsilon_; }
  std::int64_t global_step() const { return global_step_; }
  const DqnConfig& config() const { return config_; }
  const nn::Mlp& online() const { return online_; }
  nn::Mlp& mutable_online() { return online_; }
  const nn::Mlp& target() const { return target_; }
  const ReplayBuffer& replay() const { return replay_; }

 private:
  DqnConfig config_;
  nn::Mlp online_;
  nn::Mlp target_;
  nn::AdamState opt_;
  ReplayBuffer replay_;
  double epsilon_;
  std::int64_t global_step_ = 0;
};

}  // namespace jitai
