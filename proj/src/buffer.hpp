#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "common.hpp"
#include "flow_actor.hpp"
#include "rng.hpp"

namespace fpo {

struct Transition {
  Vec s;
  Vec x;  // latent actually handed to the base decoder
  Vec a;  // executed low-level action chunk, flattened
  double r = 0.0;
  Vec s_next;
  bool done = false;       // environment terminal
  bool truncated = false;  // horizon cut; bootstrap still applies
  double cfm_loss_init = 0.0;  // flow-matching loss at collection time
  std::vector<CfmSample> draws;
  std::uint64_t rollout_id = 0;  // stamped by the buffer, 1-based
  int step_index = 0;

  // Trainer-owned scratch, refreshed between phases.
  double cfm_loss_old = 0.0;  // re-anchored at every policy snapshot sync
  double logp_old = 0.0;      // Gaussian baseline only
  double value = 0.0;
  double adv = 0.0;
};

// Sliding window over whole rollouts: at most `window` retained, oldest
// evicted first. Transitions inside a rollout stay in step order.
class TrajectoryBuffer {
 public:
  explicit TrajectoryBuffer(int window);

  int window() const { return window_; }
  std::size_t rollout_count() const { return rollouts_.size(); }
  std::size_t size() const { return total_; }
  bool empty() const { return total_ == 0; }

  // Stamps rollout_id on every transition, appends, evicts if over window.
  void push_rollout(std::vector<Transition> trajectory);

  // Uniform without replacement; falls back to with-replacement draws when
  // batch_size exceeds the population. Pointers stay valid until the next
  // push_rollout or clear.
  std::vector<Transition*> sample_batch(std::size_t batch_size, Rng& rng);

  const std::deque<std::vector<Transition>>& rollouts() const {
    return rollouts_;
  }
  std::deque<std::vector<Transition>>& rollouts_mutable() { return rollouts_; }

  std::uint64_t min_rollout_id() const;
  std::uint64_t max_rollout_id() const;

  void clear();

 private:
  int window_;
  std::uint64_t next_id_ = 1;
  std::size_t total_ = 0;
  std::deque<std::vector<Transition>> rollouts_;
};

}  // namespace fpo
