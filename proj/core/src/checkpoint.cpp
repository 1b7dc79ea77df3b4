#include <array>
#include <bit>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "jitai/nn.hpp"

namespace jitai::nn {

namespace {

constexpr std::array<char, 4> kMagic = {'J', 'M', 'L', 'P'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kMaxLayers = 1024;
constexpr std::uint32_t kMaxWidth = 1u << 20;

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::ostream& out, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.write(bytes, sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  char bytes[sizeof(T)];
  if (!in.read(bytes, sizeof(T))) {
    throw std::runtime_error("checkpoint truncated");
  }
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void save_checkpoint(const Mlp& net, std::ostream& out) {
  net.validate();
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(net.layers.size()));
  for (const auto& l : net.layers) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(l.out_dim()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(l.in_dim()));
    put<std::uint8_t>(out, static_cast<std::uint8_t>(l.activation));
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) {
        put<double>(out, l.weights(r, c));
      }
    }
    for (Eigen::Index r = 0; r < l.biases.size(); ++r) put<double>(out, l.biases(r));
  }
  if (!out) throw std::runtime_error("checkpoint write failed");
}

Mlp load_checkpoint(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw std::runtime_error("not a network checkpoint (bad magic)");
  }
  if (get<std::uint32_t>(in) != kVersion) {
    throw std::runtime_error("unsupported checkpoint version");
  }
  const auto count = get<std::uint32_t>(in);
  if (count == 0 || count > kMaxLayers) {
    throw std::runtime_error("checkpoint layer count out of range");
  }
  Mlp net;
  net.layers.resize(count);
  for (auto& l : net.layers) {
    const auto out_dim = get<std::uint32_t>(in);
    const auto in_dim = get<std::uint32_t>(in);
    const auto act = get<std::uint8_t>(in);
    if (out_dim == 0 || in_dim == 0 || out_dim > kMaxWidth || in_dim > kMaxWidth) {
      throw std::runtime_error("checkpoint layer shape out of range");
    }
    if (act > static_cast<std::uint8_t>(Activation::kRelu)) {
      throw std::runtime_error("checkpoint has unknown activation");
    }
    l.activation = static_cast<Activation>(act);
    l.weights.resize(out_dim, in_dim);
    l.biases.resize(out_dim);
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) {
        l.weights(r, c) = get<double>(in);
      }
    }
    for (Eigen::Index r = 0; r < l.biases.size(); ++r) l.biases(r) = get<double>(in);
  }
  net.validate();
  return net;
}

}  // namespace jitai::nn
