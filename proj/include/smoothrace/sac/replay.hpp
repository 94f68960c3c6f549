#pragma once

#include <cstddef>
#include <vector>

#include "smoothrace/image.hpp"
#include "smoothrace/nn/tensor.hpp"
#include "smoothrace/rng.hpp"
#include "smoothrace/sim/car.hpp"

namespace smoothrace::sac {

struct Transition {
  Observation obs;
  sim::ActionCmd action;
  double reward = 0.0;
  Observation next_obs;
  bool done = false;
  double speed_norm01 = 0.0;           // commanded speed mapped to [0,1]
  double reward_norm01 = 0.0;          // reward is already in [0,1]
  double measured_speed_norm01 = 0.0;  // (v - 1) / 3 clamped to [0,1]
};

Transition make_transition(Observation obs, const sim::ActionCmd& action, double reward, Observation next_obs,
                           bool done, double measured_speed);

struct Batch {
  nn::Tensor obs;       // [N, 1, H, W]
  nn::Tensor next_obs;  // [N, 1, H, W]
  nn::Tensor action;    // [N, 2]
  std::vector<double> reward;
  std::vector<double> done;
  std::vector<double> speed_norm01;
  std::vector<double> reward_norm01;
  std::vector<double> measured_speed_norm01;

  std::size_t size() const { return reward.size(); }
};

Batch make_batch(const std::vector<const Transition*>& items);

/// Fixed-capacity ring buffer; once full, each push overwrites the oldest entry.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return items_.size(); }
  const Transition& at(std::size_t i) const;  // i-th oldest
  std::size_t cursor() const { return cursor_; }

  /// Uniform sample without replacement within the batch.
  std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const;
  Batch sample(std::size_t n, Rng& rng) const;

 private:
  std::vector<Transition> items_;
  std::size_t cursor_ = 0;
  std::size_t size_ = 0;
};

}  // namespace smoothrace::sac
