#pragma once

// Small dense feed-forward networks with two fixed reverse-mode paths:
// the gradient of a log-softmax entry (policy gradient) and the gradient
// of an arbitrary output cotangent (value regression). Everything is
// double precision and value-typed.

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "jitai/env.hpp"

namespace jitai::nn {

enum class Activation : std::uint8_t { kIdentity = 0, kRelu = 1 };

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd biases;   // out
  Activation activation = Activation::kIdentity;

  int in_dim() const { return static_cast<int>(weights.cols()); }
  int out_dim() const { return static_cast<int>(weights.rows()); }
};

struct Mlp {
  std::vector<DenseLayer> layers;

  int input_dim() const;
  int output_dim() const;
  std::size_t parameter_count() const;

  // Throws std::invalid_argument if layer shapes do not chain or a
  // parameter is non-finite.
  void validate() const;
};

bool operator==(const Mlp& a, const Mlp& b);

// sizes = {input, hidden..., output}. Hidden layers use ReLU, the last
// layer uses `output_activation`. Weights are He-uniform
// U(-sqrt(6/fan_in), +sqrt(6/fan_in)); biases start at zero.
Mlp make_mlp(std::span<const int> sizes, Rng& rng,
             Activation output_activation = Activation::kIdentity);

void zero_output_layer(Mlp& net);

struct LayerGradient {
  Eigen::MatrixXd weights;
  Eigen::VectorXd biases;
};

struct Gradient {
  std::vector<LayerGradient> layers;

  static Gradient zeros_like(const Mlp& net);

  Gradient& operator+=(const Gradient& other);
  Gradient& operator*=(double s);
  double squared_norm() const;
  double norm() const;
  double max_abs() const;
  bool same_shape(const Mlp& net) const;
};

// Parameters in checkpoint order: per layer, weights row-major then biases.
std::vector<double> flatten(const Mlp& net);
std::vector<double> flatten(const Gradient& grad);
void unflatten(Mlp& net, std::span<const double> params);

Eigen::VectorXd forward(const Mlp& net, std::span<const double> input);

// Column-per-sample batched forward. inputs is input_dim x N.
Eigen::MatrixXd forward_batch(const Mlp& net, const Eigen::MatrixXd& inputs);

// Sum over columns of the parameter gradient of <output_grads, forward(x)>.
Gradient backward_batch(const Mlp& net, const Eigen::MatrixXd& inputs,
                        const Eigen::MatrixXd& output_grads);

Eigen::VectorXd softmax(std::span<const double> logits);
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

// Gradient w.r.t. parameters of log softmax(forward(net, input))[action].
Gradient backward_logprob(const Mlp& net, std::span<const double> input,
                          int action);

// Gradient w.r.t. parameters of <output_grad, forward(net, input)>.
Gradient backward_value(const Mlp& net, std::span<const double> input,
                        std::span<const double> output_grad);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  Gradient m;
  Gradient v;
  std::int64_t step = 0;

  static AdamState for_net(const Mlp& net, AdamConfig config);
};

// One bias-corrected Adam descent step: params -= lr * m_hat / (sqrt(v_hat) + eps).
// Throws std::invalid_argument on shape mismatch.
void adam_step(Mlp& net, const Gradient& grad, AdamState& opt);

// Binary checkpoint, little-endian:
//   "JMLP" | u32 version=1 | u32 layer_count
//   per layer: u32 out | u32 in | u8 activation | f64 weights[out*in] row-major
//              | f64 biases[out]
void save_checkpoint(const Mlp& net, std::ostream& out);
Mlp load_checkpoint(std::istream& in);

}  // namespace jitai::nn
