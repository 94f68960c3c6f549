#include "smoothrace/sac/replay.hpp"

#include <algorithm>

#include "smoothrace/error.hpp"
#include "smoothrace/nn/actor.hpp"

namespace smoothrace::sac {

Transition make_transition(Observation obs, const sim::ActionCmd& action, double reward, Observation next_obs,
                           bool done, double measured_speed) {
  Transition t;
  t.obs = std::move(obs);
  t.action = action;
  t.reward = reward;
  t.next_obs = std::move(next_obs);
  t.done = done;
  t.speed_norm01 = action.speed_norm01();
  t.reward_norm01 = std::clamp(reward, 0.0, 1.0);
  t.measured_speed_norm01 = std::clamp((measured_speed - sim::kMinSpeed) / (sim::kMaxSpeed - sim::kMinSpeed), 0.0, 1.0);
  return t;
}

Batch make_batch(const std::vector<const Transition*>& items) {
  if (items.empty()) throw ParameterError("cannot build an empty batch");
  Batch b;
  std::vector<const Image*> obs, next;
  obs.reserve(items.size());
  next.reserve(items.size());
  b.action = nn::Tensor({items.size(), 2});
  for (std::size_t i = 0; i < items.size(); ++i) {
    const Transition& t = *items[i];
    obs.push_back(&t.obs);
    next.push_back(&t.next_obs);
    b.action[2 * i] = static_cast<Real>(t.action.steer_norm);
    b.action[2 * i + 1] = static_cast<Real>(t.action.speed_norm);
    b.reward.push_back(t.reward);
    b.done.push_back(t.done ? 1.0 : 0.0);
    b.speed_norm01.push_back(t.speed_norm01);
    b.reward_norm01.push_back(t.reward_norm01);
    b.measured_speed_norm01.push_back(t.measured_speed_norm01);
  }
  b.obs = nn::images_to_batch(obs);
  b.next_obs = nn::images_to_batch(next);
  return b;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : items_(capacity) {
  if (capacity == 0) throw ParameterError("replay capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  items_[cursor_] = std::move(t);
  cursor_ = (cursor_ + 1) % items_.size();
  size_ = std::min(size_ + 1, items_.size());
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw ParameterError("replay index out of range");
  const std::size_t oldest = size_ < items_.size() ? 0 : cursor_;
  return items_[(oldest + i) % items_.size()];
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n, Rng& rng) const {
  if (n == 0) throw ParameterError("batch size must be positive");
  if (n > size_) throw ParameterError("replay holds fewer transitions than the batch size");
  // Floyd's algorithm: n distinct indices in O(n^2) without touching the whole buffer.
  std::vector<std::size_t> picked;
  picked.reserve(n);
  for (std::size_t j = size_ - n; j < size_; ++j) {
    const std::size_t r = std::uniform_int_distribution<std::size_t>(0, j)(rng.engine());
    if (std::find(picked.begin(), picked.end(), r) == picked.end())
      picked.push_back(r);
    else
      picked.push_back(j);
  }
  return picked;
}

Batch ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  const auto idx = sample_indices(n, rng);
  std::vector<const Transition*> items;
  items.reserve(n);
  for (std::size_t i : idx) items.push_back(&at(i));
  return make_batch(items);
}

}  // namespace smoothrace::sac
