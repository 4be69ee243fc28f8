#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "common.hpp"
#include "mlp.hpp"
#include "rng.hpp"

namespace fpo {

enum class RewardMode { kSparse, kShaped };
enum class EnvKind { kPointReach, kPushBlock };

struct StepResult {
  Vec s_next;
  double r = 0.0;
  bool done = false;       // terminal success
  bool truncated = false;  // horizon cut
};

// Desk-scale continuous-control tasks. One env tick consumes one low-level
// action (components clipped to [-1, 1]); the horizon is counted in ticks.
class Env {
 public:
  virtual ~Env() = default;

  virtual EnvKind kind() const = 0;
  virtual int state_dim() const = 0;
  virtual int action_dim() const = 0;
  int chunk_len() const { return chunk_len_; }
  int latent_dim() const { return chunk_len_ * action_dim(); }
  int max_ticks() const { return max_ticks_; }
  double goal_tol() const { return goal_tol_; }
  RewardMode reward_mode() const { return reward_mode_; }

  int tick() const { return tick_; }
  bool episode_over() const { return done_ || truncated_; }
  const Vec& state() const { return state_; }

  virtual Vec reset(Rng& rng) = 0;
  // Debug entry: installs the exact given state, tick 0.
  void reset_pinned(const Vec& full_state);
  StepResult step(std::span<const double> action);

  // Goal predicate on an arbitrary state vector.
  virtual bool at_goal(const Vec& s) const = 0;
  // Scripted controller used by the demonstrators.
  virtual Vec expert_action(const Vec& s) const = 0;

 protected:
  Env(int chunk_len, int max_ticks, double goal_tol, RewardMode mode);
  // Advances the physical state by one tick with a pre-clipped action.
  virtual void advance(const Vec& action) = 0;
  // Shaped-mode distance term (negative progress penalty input).
  virtual double goal_distance(const Vec& s) const = 0;

  Vec state_;
  int chunk_len_;
  int max_ticks_;
  double goal_tol_;
  RewardMode reward_mode_;
  int tick_ = 0;
  bool done_ = false;
  bool truncated_ = false;
};

// Double-integrator point mass: state [pos(2), vel(2), goal(2)].
// Semi-implicit Euler with dt = 0.1: vel += dt*a (capped at +-2 per axis),
// pos += dt*vel (clamped to the +-1.5 box, clamped axis zeroes its velocity).
// From rest under constant action a the closed form before any cap is
// pos_k = pos_0 + dt^2 * a * k*(k+1)/2.
class PointReachEnv : public Env {
 public:
  PointReachEnv(int chunk_len, int max_ticks, double goal_tol,
                RewardMode mode);
  EnvKind kind() const override { return EnvKind::kPointReach; }
  int state_dim() const override { return 6; }
  int action_dim() const override { return 2; }
  Vec reset(Rng& rng) override;
  bool at_goal(const Vec& s) const override;
  Vec expert_action(const Vec& s) const override;

  static constexpr double kDt = 0.1;
  static constexpr double kVelCap = 2.0;
  static constexpr double kPosClamp = 1.5;

 protected:
  void advance(const Vec& action) override;
  double goal_distance(const Vec& s) const override;
};

// Agent disk must push a block disk into the goal zone. State
// [agent_pos(2), agent_vel(2), block_pos(2), goal(2)]. The agent is the same
// double integrator; when the disks overlap after the agent moves, the block
// is projected out along the agent->block normal to exactly contact
// separation, which is what lets the agent shove it.
class PushBlockEnv : public Env {
 public:
  PushBlockEnv(int chunk_len, int max_ticks, double goal_tol,
               RewardMode mode);
  EnvKind kind() const override { return EnvKind::kPushBlock; }
  int state_dim() const override { return 8; }
  int action_dim() const override { return 2; }
  Vec reset(Rng& rng) override;
  bool at_goal(const Vec& s) const override;
  Vec expert_action(const Vec& s) const override;

  static constexpr double kDt = 0.1;
  static constexpr double kVelCap = 2.0;
  static constexpr double kPosClamp = 1.5;
  static constexpr double kContactRadius = 0.22;

 protected:
  void advance(const Vec& action) override;
  double goal_distance(const Vec& s) const override;
};

std::unique_ptr<Env> make_env(EnvKind kind, int chunk_len, int max_ticks,
                              double goal_tol, RewardMode mode);
EnvKind parse_env_kind(const std::string& name);
std::string env_kind_name(EnvKind kind);

// Frozen mapping (s, x) -> H low-level actions. Identity mode reshapes x;
// network mode runs a trained-then-frozen net. Either way outputs are
// clipped to [-1, 1] and the parameter hash must never change.
class BaseDecoder {
 public:
  static BaseDecoder identity(int state_dim, int action_dim, int chunk_len);
  static BaseDecoder network(Mlp net, int state_dim, int action_dim,
                             int chunk_len);

  bool is_identity() const { return !net_.has_value(); }
  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }
  int chunk_len() const { return chunk_len_; }
  int latent_dim() const { return action_dim_ * chunk_len_; }

  // Flattened H*d_a action chunk, components clipped to [-1, 1].
  Vec decode_flat(std::span<const double> s, std::span<const double> x) const;

  const Mlp& net() const;
  Mlp& net_mutable();  // pre-freeze training access
  void freeze();       // records the parameter hash
  bool frozen() const { return frozen_; }
  std::uint64_t param_hash() const { return hash_; }
  // Recomputes the hash and fails loudly if the parameters drifted.
  void check_frozen() const;

 private:
  BaseDecoder(int state_dim, int action_dim, int chunk_len);
  int state_dim_;
  int action_dim_;
  int chunk_len_;
  std::optional<Mlp> net_;
  bool frozen_ = false;
  std::uint64_t hash_ = 0;
};

// Demo chunks are lifted to latents by flattening; the decoder learns (or
// trivially is) the inverse.
Vec lift_chunk(const std::vector<Vec>& chunk);

enum class DemoQuality { kExpert, kSuboptimal };

struct DemoStep {
  Vec s;      // state at the chunk boundary
  Vec chunk;  // H*d_a executed actions, flattened
};

struct DemoEpisode {
  std::vector<DemoStep> steps;
  bool success = false;
  int ticks = 0;
};

// Runs the scripted controller, recording one (s, chunk) pair per H ticks.
// Suboptimal quality rotates each 2-D action by angle_bias radians and adds
// N(0, action_noise^2) per component before clipping. Partial trailing
// chunks are dropped.
DemoEpisode scripted_demo(Env& env, DemoQuality quality, Rng& rng,
                          double angle_bias, double action_noise);

}  // namespace fpo
