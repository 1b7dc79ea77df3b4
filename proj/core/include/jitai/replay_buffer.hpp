#pragma once

#include <cstddef>
#include <vector>

#include "jitai/env.hpp"

namespace jitai {

struct Transition {
  Observation obs;
  int action = 0;
  double reward = 0.0;
  Observation next_obs;
  bool done = false;
};

// Fixed-capacity FIFO; pushing at capacity evicts the oldest entry.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(const Transition& t);

  // i.i.d. uniform draws with replacement. Throws std::logic_error when
  // the buffer is empty.
  const Transition& sample(Rng& rng) const;
  std::vector<Transition> sample(std::size_t n, Rng& rng) const;

  // Index 0 is the oldest entry.
  const Transition& at(std::size_t i) const;

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return size_ == 0; }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // slot of the oldest entry once full
  std::size_t size_ = 0;
  std::vector<Transition> slots_;
};

}  // namespace jitai
