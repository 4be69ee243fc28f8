#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "envlab.hpp"

namespace fpo {

enum class Algo { kFpo, kRwfm, kGppo };

Algo parse_algo(const std::string& name);
std::string algo_name(Algo a);
RewardMode parse_reward_mode(const std::string& name);
std::string reward_mode_name(RewardMode m);

// Whole-run configuration. Defaults here are the pinned experiment defaults;
// every field is settable from the key=value config file.
struct TrainerConfig {
  Algo algo = Algo::kFpo;
  EnvKind env = EnvKind::kPointReach;
  RewardMode reward_mode = RewardMode::kSparse;
  std::uint64_t seed = 1;

  int num_envs = 4;
  int chunk_len = 4;
  int max_episode_ticks = 120;
  double goal_tol = 0.15;

  std::vector<int> actor_hidden = {32, 32};
  std::vector<int> critic_hidden = {32, 32};
  std::vector<int> decoder_hidden = {32, 32};
  bool decoder_identity = false;
  int flow_steps = 8;
  int m_draws = 4;

  int explore_k = 4;
  double explore_eta = 0.05;
  double explore_noise = 0.05;
  double explore_tau = 1.0;

  double gamma = 0.99;
  double gae_lambda = 0.95;
  double beta = 1.0;
  double clip_eps = 0.2;
  double z_max = 5.0;
  double sigma_floor = 1e-8;
  int ensemble_m = 2;
  double polyak_tau = 0.005;

  int buffer_window = 8;
  int t_rollout = 512;
  int k_update = 32;
  int batch_size = 256;
  double actor_lr = 3e-4;
  double critic_lr = 1e-3;
  double max_grad_norm = 10.0;

  std::int64_t total_ticks = 192000;
  std::int64_t eval_interval = 8192;
  int eval_episodes = 50;

  int bc_epochs = 40;
  int bc_batch = 256;
  double bc_lr = 1e-3;
  int decoder_epochs = 40;
  int demo_episodes = 300;
  double demo_noise = 0.28;
  double demo_angle_bias = 1.05;

  double rwfm_temperature = 1.0;
  double gppo_init_sigma = 0.5;

  bool no_ratio = false;
  bool no_clip = false;
  bool k1_explore = false;
  bool single_critic = false;
  bool dump_buffer = false;

  int state_dim() const { return env == EnvKind::kPointReach ? 6 : 8; }
  int action_dim() const { return 2; }
  int latent_dim() const { return chunk_len * action_dim(); }
  // Ablation-effective values.
  int effective_explore_k() const { return k1_explore ? 1 : explore_k; }
  int effective_ensemble_m() const { return single_critic ? 1 : ensemble_m; }
};

// Canonical serialization: one key=value per line, fixed order. Parsing it
// back reproduces the struct; its FNV-1a hash identifies the run config.
std::string config_text(const TrainerConfig& cfg);
std::uint64_t config_hash(const TrainerConfig& cfg);

// key=value lines, '#' comments, blank lines ignored. Unknown keys and
// out-of-range values are collected and reported together.
TrainerConfig parse_config_text(const std::string& text);
TrainerConfig load_config(const std::string& path);
void save_config(const TrainerConfig& cfg, const std::string& path);

// Throws std::invalid_argument listing every violated field with its value
// and allowed range.
void validate_config(const TrainerConfig& cfg);

}  // namespace fpo
