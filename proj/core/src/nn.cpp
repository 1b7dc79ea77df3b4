#include "jitai/nn.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace jitai::nn {

namespace {

Eigen::Map<const Eigen::VectorXd> as_vector(std::span<const double> xs) {
  return {xs.data(), static_cast<Eigen::Index>(xs.size())};
}

void apply_activation(Activation act, Eigen::MatrixXd& z) {
  if (act == Activation::kRelu) z = z.cwiseMax(0.0);
}

void check_input(const Mlp& net, Eigen::Index rows) {
  if (net.layers.empty()) throw std::invalid_argument("network has no layers");
  if (rows != net.input_dim()) {
    throw std::invalid_argument("input has " + std::to_string(rows) +
                                " features, network expects " +
                                std::to_string(net.input_dim()));
  }
}

}  // namespace

int Mlp::input_dim() const {
  return layers.empty() ? 0 : layers.front().in_dim();
}

int Mlp::output_dim() const {
  return layers.empty() ? 0 : layers.back().out_dim();
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) {
    n += static_cast<std::size_t>(l.weights.size() + l.biases.size());
  }
  return n;
}

void Mlp::validate() const {
  if (layers.empty()) throw std::invalid_argument("network has no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.biases.size() != l.weights.rows()) {
      throw std::invalid_argument("layer " + std::to_string(i) +
                                  ": bias length differs from weight rows");
    }
    if (i > 0 && l.in_dim() != layers[i - 1].out_dim()) {
      throw std::invalid_argument("layer " + std::to_string(i) +
                                  ": input width does not chain");
    }
    if (!l.weights.allFinite() || !l.biases.allFinite()) {
      throw std::invalid_argument("layer " + std::to_string(i) +
                                  ": non-finite parameter");
    }
  }
}

bool operator==(const Mlp& a, const Mlp& b) {
  if (a.layers.size() != b.layers.size()) return false;
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    const auto& x = a.layers[i];
    const auto& y = b.layers[i];
    if (x.activation != y.activation) return false;
    if (x.weights.rows() != y.weights.rows() ||
        x.weights.cols() != y.weights.cols() ||
        x.biases.size() != y.biases.size()) {
      return false;
    }
    if (x.weights != y.weights || x.biases != y.biases) return false;
  }
  return true;
}

Mlp make_mlp(std::span<const int> sizes, Rng& rng,
             Activation output_activation) {
  if (sizes.size() < 2) throw std::invalid_argument("make_mlp needs >= 2 sizes");
  for (int s : sizes) {
    if (s < 1) throw std::invalid_argument("make_mlp: layer widths must be >= 1");
  }
  Mlp net;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    const int in = sizes[i];
    const int out = sizes[i + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(in));
    std::uniform_real_distribution<double> u(-bound, bound);
    DenseLayer layer;
    layer.weights.resize(out, in);
    for (Eigen::Index r = 0; r < out; ++r) {
      for (Eigen::Index c = 0; c < in; ++c) layer.weights(r, c) = u(rng);
    }
    layer.biases = Eigen::VectorXd::Zero(out);
    layer.activation =
        i + 2 == sizes.size() ? output_activation : Activation::kRelu;
    net.layers.push_back(std::move(layer));
  }
  return net;
}

void zero_output_layer(Mlp& net) {
  if (net.layers.empty()) return;
  net.layers.back().weights.setZero();
  net.layers.back().biases.setZero();
}

Gradient Gradient::zeros_like(const Mlp& net) {
  Gradient g;
  g.layers.reserve(net.layers.size());
  for (const auto& l : net.layers) {
    g.layers.push_back({Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()),
                        Eigen::VectorXd::Zero(l.biases.size())});
  }
  return g;
}

Gradient& Gradient::operator+=(const Gradient& other) {
  if (other.layers.size() != layers.size()) {
    throw std::invalid_argument("gradient shape mismatch");
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].weights += other.layers[i].weights;
    layers[i].biases += other.layers[i].biases;
  }
  return *this;
}

Gradient& Gradient::operator*=(double s) {
  for (auto& l : layers) {
    l.weights *= s;
    l.biases *= s;
  }
  return *this;
}

double Gradient::squared_norm() const {
  double n = 0.0;
  for (const auto& l : layers) n += l.weights.squaredNorm() + l.biases.squaredNorm();
  return n;
}

double Gradient::norm() const { return std::sqrt(squared_norm()); }

double Gradient::max_abs() const {
  double m = 0.0;
  for (const auto& l : layers) {
    if (l.weights.size() > 0) m = std::max(m, l.weights.cwiseAbs().maxCoeff());
    if (l.biases.size() > 0) m = std::max(m, l.biases.cwiseAbs().maxCoeff());
  }
  return m;
}

bool Gradient::same_shape(const Mlp& net) const {
  if (layers.size() != net.layers.size()) return false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].weights.rows() != net.layers[i].weights.rows() ||
        layers[i].weights.cols() != net.layers[i].weights.cols() ||
        layers[i].biases.size() != net.layers[i].biases.size()) {
      return false;
    }
  }
  return true;
}

namespace {

template <typename Layers>
std::vector<double> flatten_layers(const Layers& layers) {
  std::vector<double> out;
  for (const auto& l : layers) {
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) {
        out.push_back(l.weights(r, c));
      }
    }
    for (Eigen::Index r = 0; r < l.biases.size(); ++r) out.push_back(l.biases(r));
  }
  return out;
}

}  // namespace

std::vector<double> flatten(const Mlp& net) { return flatten_layers(net.layers); }

std::vector<double> flatten(const Gradient& grad) {
  return flatten_layers(grad.layers);
}

void unflatten(Mlp& net, std::span<const double> params) {
  if (params.size() != net.parameter_count()) {
    throw std::invalid_argument("unflatten: parameter count mismatch");
  }
  std::size_t i = 0;
  for (auto& l : net.layers) {
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) {
        l.weights(r, c) = params[i++];
      }
    }
    for (Eigen::Index r = 0; r < l.biases.size(); ++r) l.biases(r) = params[i++];
  }
}

Eigen::VectorXd forward(const Mlp& net, std::span<const double> input) {
  check_input(net, static_cast<Eigen::Index>(input.size()));
  Eigen::VectorXd a = as_vector(input);
  for (const auto& l : net.layers) {
    Eigen::VectorXd z = l.weights * a + l.biases;
    if (l.activation == Activation::kRelu) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a;
}

Eigen::MatrixXd forward_batch(const Mlp& net, const Eigen::MatrixXd& inputs) {
  check_input(net, inputs.rows());
  Eigen::MatrixXd a = inputs;
  for (const auto& l : net.layers) {
    Eigen::MatrixXd z = l.weights * a;
    z.colwise() += l.biases;
    apply_activation(l.activation, z);
    a = std::move(z);
  }
  return a;
}

Gradient backward_batch(const Mlp& net, const Eigen::MatrixXd& inputs,
                        const Eigen::MatrixXd& output_grads) {
  check_input(net, inputs.rows());
  if (output_grads.rows() != net.output_dim() ||
      output_grads.cols() != inputs.cols()) {
    throw std::invalid_argument("output cotangent shape mismatch");
  }
  // activations[i] is the input to layer i; activations.back() the output.
  std::vector<Eigen::MatrixXd> activations;
  activations.reserve(net.layers.size() + 1);
  activations.push_back(inputs);
  for (const auto& l : net.layers) {
    Eigen::MatrixXd z = l.weights * activations.back();
    z.colwise() += l.biases;
    apply_activation(l.activation, z);
    activations.push_back(std::move(z));
  }

  Gradient g;
  g.layers.resize(net.layers.size());
  Eigen::MatrixXd delta = output_grads;
  for (std::size_t i = net.layers.size(); i-- > 0;) {
    const auto& l = net.layers[i];
    if (l.activation == Activation::kRelu) {
      // ReLU derivative taken as 0 at the kink.
      delta = delta.cwiseProduct(
          (activations[i + 1].array() > 0.0).cast<double>().matrix());
    }
    g.layers[i].weights = delta * activations[i].transpose();
    g.layers[i].biases = delta.rowwise().sum();
    if (i > 0) delta = l.weights.transpose() * delta;
  }
  return g;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  if (logits.size() == 0) return logits;
  const double m = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - m).exp();
  return e / e.sum();
}

Eigen::VectorXd softmax(std::span<const double> logits) {
  return softmax(Eigen::VectorXd(as_vector(logits)));
}

Gradient backward_logprob(const Mlp& net, std::span<const double> input,
                          int action) {
  if (action < 0 || action >= net.output_dim()) {
    throw std::invalid_argument("backward_logprob: action out of range");
  }
  const Eigen::VectorXd probs = softmax(forward(net, input));
  Eigen::MatrixXd cotangent = -probs;
  cotangent(action, 0) += 1.0;
  return backward_batch(net, as_vector(input), cotangent);
}

Gradient backward_value(const Mlp& net, std::span<const double> input,
                        std::span<const double> output_grad) {
  if (static_cast<int>(output_grad.size()) != net.output_dim()) {
    throw std::invalid_argument("backward_value: cotangent length mismatch");
  }
  return backward_batch(net, as_vector(input), as_vector(output_grad));
}

AdamState AdamState::for_net(const Mlp& net, AdamConfig config) {
  AdamState s;
  s.config = config;
  s.m = Gradient::zeros_like(net);
  s.v = Gradient::zeros_like(net);
  return s;
}

void adam_step(Mlp& net, const Gradient& grad, AdamState& opt) {
  if (!grad.same_shape(net) || !opt.m.same_shape(net) || !opt.v.same_shape(net)) {
    throw std::invalid_argument("adam_step: shape mismatch");
  }
  const AdamConfig& c = opt.config;
  opt.step += 1;
  const double t = static_cast<double>(opt.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);

  auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v = c.beta2 * v + (1.0 - c.beta2) * g.cwiseProduct(g);
    param.array() -= c.lr * (m.array() / bc1) /
                     ((v.array() / bc2).sqrt() + c.epsilon);
  };
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    update(net.layers[i].weights, grad.layers[i].weights, opt.m.layers[i].weights,
           opt.v.layers[i].weights);
    update(net.layers[i].biases, grad.layers[i].biases, opt.m.layers[i].biases,
           opt.v.layers[i].biases);
  }
}

}  // namespace jitai::nn
