#include "buffer.hpp"

#include <algorithm>

namespace fpo {

TrajectoryBuffer::TrajectoryBuffer(int window) : window_(window) {
  if (window < 1) fail_arg("TrajectoryBuffer: window must be >= 1");
}

void TrajectoryBuffer::push_rollout(std::vector<Transition> trajectory) {
  if (trajectory.empty()) fail_arg("push_rollout: empty trajectory");
  for (std::size_t i = 1; i < trajectory.size(); ++i) {
    if (trajectory[i].step_index != trajectory[i - 1].step_index + 1)
      fail_arg("push_rollout: step indices not contiguous");
  }
  const std::uint64_t id = next_id_++;
  for (auto& t : trajectory) t.rollout_id = id;
  total_ += trajectory.size();
  rollouts_.push_back(std::move(trajectory));
  while (rollouts_.size() > static_cast<std::size_t>(window_)) {
    total_ -= rollouts_.front().size();
    rollouts_.pop_front();
  }
}

std::vector<Transition*> TrajectoryBuffer::sample_batch(std::size_t batch_size,
                                                        Rng& rng) {
  if (empty()) fail("sample_batch: empty buffer");
  if (batch_size == 0) fail_arg("sample_batch: batch_size must be positive");
  std::vector<Transition*> flat;
  flat.reserve(total_);
  for (auto& rollout : rollouts_)
    for (auto& t : rollout) flat.push_back(&t);

  std::vector<Transition*> out;
  out.reserve(batch_size);
  if (batch_size > flat.size()) {
    for (std::size_t i = 0; i < batch_size; ++i)
      out.push_back(flat[rng.uniform_index(flat.size())]);
    return out;
  }
  // Partial Fisher-Yates over the flat index view.
  for (std::size_t i = 0; i < batch_size; ++i) {
    const std::size_t j = i + rng.uniform_index(flat.size() - i);
    std::swap(flat[i], flat[j]);
    out.push_back(flat[i]);
  }
  return out;
}

std::uint64_t TrajectoryBuffer::min_rollout_id() const {
  if (rollouts_.empty()) fail("min_rollout_id: empty buffer");
  return rollouts_.front().front().rollout_id;
}

std::uint64_t TrajectoryBuffer::max_rollout_id() const {
  if (rollouts_.empty()) fail("max_rollout_id: empty buffer");
  return rollouts_.back().front().rollout_id;
}

void TrajectoryBuffer::clear() {
  rollouts_.clear();
  total_ = 0;
}

}  // namespace fpo
