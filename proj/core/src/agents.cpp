#include "jitai/agents.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace jitai {

namespace {

Eigen::MatrixXd stack_observations(std::span<const Observation* const> obs,
                                   int dim) {
  Eigen::MatrixXd m(dim, static_cast<Eigen::Index>(obs.size()));
  for (std::size_t j = 0; j < obs.size(); ++j) {
    if (obs[j]->size != dim) {
      throw std::invalid_argument("observation width does not match network input");
    }
    for (int i = 0; i < dim; ++i) m(i, static_cast<Eigen::Index>(j)) = (*obs[j])[i];
  }
  return m;
}

double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace

std::vector<double> reward_to_go(std::span<const double> rewards, double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument("reward_to_go: gamma must be in (0,1]");
  }
  std::vector<double> out(rewards.size());
  double running = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    running = rewards[t] + gamma * running;
    out[t] = running;
  }
  return out;
}

int sample_action(const nn::Mlp& policy, const Observation& obs, Rng& rng) {
  const Eigen::VectorXd probs = nn::softmax(nn::forward(policy, obs.features()));
  const double u = uniform01(rng);
  double cumulative = 0.0;
  for (Eigen::Index a = 0; a < probs.size(); ++a) {
    cumulative += probs(a);
    if (u < cumulative) return static_cast<int>(a);
  }
  // u landed in the rounding gap above the final partial sum.
  for (Eigen::Index a = probs.size(); a-- > 0;) {
    if (probs(a) > 0.0) return static_cast<int>(a);
  }
  return static_cast<int>(probs.size() - 1);
}

Eigen::VectorXd dueling_q(double value, const Eigen::VectorXd& advantages) {
  return (advantages.array() - advantages.mean() + value).matrix();
}

int greedy_action(const Eigen::VectorXd& q) {
  Eigen::Index best = 0;
  for (Eigen::Index a = 1; a < q.size(); ++a) {
    if (q(a) > q(best)) best = a;
  }
  return static_cast<int>(best);
}

int epsilon_greedy(const Eigen::VectorXd& q, double epsilon, Rng& rng) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw std::invalid_argument("epsilon must be in [0,1]");
  }
  if (uniform01(rng) < epsilon) {
    std::uniform_int_distribution<int> pick(0, static_cast<int>(q.size()) - 1);
    return pick(rng);
  }
  return greedy_action(q);
}

// ---------------------------------------------------------------------------
// REINFORCE

void ReinforceConfig::validate() const {
  if (hidden < 1) throw std::invalid_argument("reinforce: hidden must be >= 1");
  if (!(lr > 0.0)) throw std::invalid_argument("reinforce: lr must be > 0");
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument("reinforce: gamma must be in (0,1]");
  }
  if (m_trajectories < 1) {
    throw std::invalid_argument("reinforce: m_trajectories must be >= 1");
  }
  if (episodes < 0) throw std::invalid_argument("reinforce: episodes must be >= 0");
  if (num_actions < 2) throw std::invalid_argument("reinforce: need >= 2 actions");
}

ReinforceAgent::ReinforceAgent(int input_dim, const ReinforceConfig& config,
                               Rng& init_rng)
    : config_(config) {
  config_.validate();
  const std::array<int, 3> sizes = {input_dim, config_.hidden, config_.num_actions};
  policy_ = nn::make_mlp(sizes, init_rng);
  // Start from the uniform policy.
  nn::zero_output_layer(policy_);
  opt_ = nn::AdamState::for_net(policy_, nn::AdamConfig{.lr = config_.lr});
}

int ReinforceAgent::act(const Observation& obs, ActMode /*mode*/, Rng& rng) {
  return sample_action(policy_, obs, rng);
}

nn::Gradient ReinforceAgent::policy_gradient(
    std::span<const Trajectory> batch) const {
  if (batch.empty()) throw std::invalid_argument("policy_gradient: empty batch");
  std::size_t total = 0;
  for (const auto& tr : batch) total += tr.size();
  if (total == 0) return nn::Gradient::zeros_like(policy_);

  std::vector<const Observation*> obs;
  obs.reserve(total);
  std::vector<int> actions;
  actions.reserve(total);
  std::vector<double> weights;
  weights.reserve(total);
  for (const auto& tr : batch) {
    const std::vector<double> g = reward_to_go(tr.rewards, config_.gamma);
    for (std::size_t t = 0; t < tr.size(); ++t) {
      obs.push_back(&tr.observations[t]);
      actions.push_back(tr.actions[t]);
      weights.push_back(g[t]);
    }
  }

  const Eigen::MatrixXd inputs = stack_observations(obs, policy_.input_dim());
  const Eigen::MatrixXd logits = nn::forward_batch(policy_, inputs);
  const double inv_m = 1.0 / static_cast<double>(batch.size());
  Eigen::MatrixXd cotangent(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const Eigen::VectorXd p = nn::softmax(Eigen::VectorXd(logits.col(j)));
    // d log softmax(z)[a] / dz = onehot(a) - p
    Eigen::VectorXd d = -p;
    d(actions[static_cast<std::size_t>(j)]) += 1.0;
    cotangent.col(j) = d * (weights[static_cast<std::size_t>(j)] * inv_m);
  }
  return nn::backward_batch(policy_, inputs, cotangent);
}

double ReinforceAgent::update(std::span<const Trajectory> batch) {
  nn::Gradient g = policy_gradient(batch);
  const double norm = g.norm();
  g *= -1.0;  // ascent on J is descent on -J
  nn::adam_step(policy_, g, opt_);
  return norm;
}

// ---------------------------------------------------------------------------
// Dueling DQN

std::vector<double> td_targets(std::span<const Transition> batch,
                               const nn::Mlp& target, double gamma) {
  if (batch.empty()) throw std::invalid_argument("td_targets: empty batch");
  std::vector<const Observation*> next;
  next.reserve(batch.size());
  for (const auto& t : batch) next.push_back(&t.next_obs);
  const Eigen::MatrixXd out =
      nn::forward_batch(target, stack_observations(next, target.input_dim()));
  const Eigen::Index n_actions = out.rows() - 1;
  std::vector<double> targets(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& t = batch[i];
    if (t.done) {
      targets[i] = t.reward;
      continue;
    }
    const auto col = out.col(static_cast<Eigen::Index>(i));
    const Eigen::VectorXd q = dueling_q(col(0), col.tail(n_actions));
    targets[i] = t.reward + gamma * q.maxCoeff();
  }
  return targets;
}

DqnLoss dqn_loss(const nn::Mlp& online, std::span<const Transition> batch,
                 std::span<const double> targets) {
  if (batch.empty() || targets.size() != batch.size()) {
    throw std::invalid_argument("dqn_loss: batch/target size mismatch");
  }
  std::vector<const Observation*> obs;
  obs.reserve(batch.size());
  for (const auto& t : batch) obs.push_back(&t.obs);
  const Eigen::MatrixXd inputs = stack_observations(obs, online.input_dim());
  const Eigen::MatrixXd out = nn::forward_batch(online, inputs);
  const Eigen::Index n_actions = out.rows() - 1;
  const double inv_n = 1.0 / static_cast<double>(batch.size());

  DqnLoss result;
  Eigen::MatrixXd cotangent = Eigen::MatrixXd::Zero(out.rows(), out.cols());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto ci = static_cast<Eigen::Index>(i);
    const int a = batch[i].action;
    if (a < 0 || a >= n_actions) throw std::invalid_argument("dqn_loss: bad action");
    const Eigen::VectorXd q = dueling_q(out(0, ci), out.col(ci).tail(n_actions));
    const double delta = q(a) - targets[i];
    result.loss += delta * delta * inv_n;
    // dL/dq_a = 2 delta / n, pushed through Q = V + A - mean(A).
    const double g = 2.0 * delta * inv_n;
    cotangent(0, ci) = g;
    for (Eigen::Index j = 0; j < n_actions; ++j) {
      cotangent(1 + j, ci) = g * ((j == a ? 1.0 : 0.0) - 1.0 / double(n_actions));
    }
  }
  result.gradient = nn::backward_batch(online, inputs, cotangent);
  return result;
}

void DqnConfig::validate() const {
  if (hidden < 1) throw std::invalid_argument("dqn: hidden must be >= 1");
  if (!(lr > 0.0)) throw std::invalid_argument("dqn: lr must be > 0");
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument("dqn: gamma must be in [0,1]");
  }
  if (batch_size < 1) throw std::invalid_argument("dqn: batch_size must be >= 1");
  if (replay_capacity < static_cast<std::size_t>(batch_size)) {
    throw std::invalid_argument("dqn: replay_capacity must be >= batch_size");
  }
  if (!(eps_end >= 0.0 && eps_end <= eps_start && eps_start <= 1.0)) {
    throw std::invalid_argument("dqn: need 0 <= eps_end <= eps_start <= 1");
  }
  if (eps_decrement < 0.0) throw std::invalid_argument("dqn: eps_decrement must be >= 0");
  if (target_sync < 1) throw std::invalid_argument("dqn: target_sync must be >= 1");
  if (episodes < 0) throw std::invalid_argument("dqn: episodes must be >= 0");
  if (num_actions < 2) throw std::invalid_argument("dqn: need >= 2 actions");
}

DqnAgent::DqnAgent(int input_dim, const DqnConfig& config, Rng& init_rng)
    : config_(config),
      replay_(config.replay_capacity > 0 ? config.replay_capacity : 1),
      epsilon_(config.eps_start) {
  config_.validate();
  const std::array<int, 4> sizes = {input_dim, config_.hidden, config_.hidden,
                                    1 + config_.num_actions};
  online_ = nn::make_mlp(sizes, init_rng);
  target_ = online_;
  opt_ = nn::AdamState::for_net(online_, nn::AdamConfig{.lr = config_.lr});
}

Eigen::VectorXd DqnAgent::q_values(const Observation& obs) const {
  const Eigen::VectorXd out = nn::forward(online_, obs.features());
  return dueling_q(out(0), out.tail(config_.num_actions));
}

int DqnAgent::act(const Observation& obs, ActMode mode, Rng& rng) {
  const Eigen::VectorXd q = q_values(obs);
  return mode == ActMode::kTrainSample ? epsilon_greedy(q, epsilon_, rng)
                                       : greedy_action(q);
}

double DqnAgent::update_on_batch(std::span<const Transition> batch) {
  const std::vector<double> targets = td_targets(batch, target_, config_.gamma);
  DqnLoss l = dqn_loss(online_, batch, targets);
  nn::adam_step(online_, l.gradient, opt_);
  ++global_step_;
  if (global_step_ % config_.target_sync == 0) target_ = online_;
  epsilon_ = std::max(config_.eps_end, epsilon_ - config_.eps_decrement);
  return l.loss;
}

std::optional<double> DqnAgent::update(Rng& rng) {
  if (replay_.size() < static_cast<std::size_t>(config_.batch_size)) {
    return std::nullopt;
  }
  const std::vector<Transition> batch =
      replay_.sample(static_cast<std::size_t>(config_.batch_size), rng);
  return update_on_batch(batch);
}

}  // namespace jitai
