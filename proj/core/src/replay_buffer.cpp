#include "jitai/replay_buffer.hpp"

#include <stdexcept>

namespace jitai {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay capacity must be >= 1");
  slots_.reserve(capacity < 4096 ? capacity : 4096);
}

void ReplayBuffer::push(const Transition& t) {
  if (size_ < capacity_) {
    slots_.push_back(t);
    ++size_;
    return;
  }
  slots_[head_] = t;
  head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw std::out_of_range("replay index out of range");
  return slots_[(head_ + i) % capacity_];
}

const Transition& ReplayBuffer::sample(Rng& rng) const {
  if (empty()) throw std::logic_error("cannot sample from an empty replay buffer");
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  return slots_[pick(rng)];
}

std::vector<Transition> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  if (empty()) throw std::logic_error("cannot sample from an empty replay buffer");
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  std::vector<Transition> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(slots_[pick(rng)]);
  return out;
}

}  // namespace jitai
