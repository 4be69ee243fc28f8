#include "config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "common.hpp"

namespace fpo {

Algo parse_algo(const std::string& name) {
  if (name == "fpo") return Algo::kFpo;
  if (name == "rwfm") return Algo::kRwfm;
  if (name == "gppo") return Algo::kGppo;
  fail_arg("unknown algo '" + name + "' (expected fpo|rwfm|gppo)");
}

std::string algo_name(Algo a) {
  switch (a) {
    case Algo::kFpo: return "fpo";
    case Algo::kRwfm: return "rwfm";
    case Algo::kGppo: return "gppo";
  }
  fail("algo_name: bad enum");
}

RewardMode parse_reward_mode(const std::string& name) {
  if (name == "sparse") return RewardMode::kSparse;
  if (name == "shaped") return RewardMode::kShaped;
  fail_arg("unknown reward_mode '" + name + "' (expected sparse|shaped)");
}

std::string reward_mode_name(RewardMode m) {
  return m == RewardMode::kSparse ? "sparse" : "shaped";
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing junk");
    return d;
  } catch (const std::exception&) {
    fail_arg(key + "=" + v + " (expected a real number)");
  }
}

std::int64_t parse_i64(const std::string& key, const std::string& v) {
  std::int64_t out = 0;
  const auto* b = v.data();
  const auto* e = v.data() + v.size();
  const auto res = std::from_chars(b, e, out);
  if (res.ec != std::errc() || res.ptr != e)
    fail_arg(key + "=" + v + " (expected an integer)");
  return out;
}

int parse_int(const std::string& key, const std::string& v) {
  const std::int64_t x = parse_i64(key, v);
  if (x < INT32_MIN || x > INT32_MAX) fail_arg(key + "=" + v + " (out of int range)");
  return static_cast<int>(x);
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto* b = v.data();
  const auto* e = v.data() + v.size();
  const auto res = std::from_chars(b, e, out);
  if (res.ec != std::errc() || res.ptr != e)
    fail_arg(key + "=" + v + " (expected an unsigned integer)");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail_arg(key + "=" + v + " (expected true|false)");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) fail_arg(key + "=" + v + " (empty list element)");
    out.push_back(parse_int(key, item));
  }
  if (out.empty()) fail_arg(key + "=" + v + " (expected comma-separated ints)");
  return out;
}

void apply_kv(TrainerConfig& c, const std::string& key,
              const std::string& val) {
  if (key == "algo") c.algo = parse_algo(val);
  else if (key == "env") c.env = parse_env_kind(val);
  else if (key == "reward_mode") c.reward_mode = parse_reward_mode(val);
  else if (key == "seed") c.seed = parse_u64(key, val);
  else if (key == "num_envs") c.num_envs = parse_int(key, val);
  else if (key == "chunk_len") c.chunk_len = parse_int(key, val);
  else if (key == "max_episode_ticks") c.max_episode_ticks = parse_int(key, val);
  else if (key == "goal_tol") c.goal_tol = parse_double(key, val);
  else if (key == "actor_hidden") c.actor_hidden = parse_int_list(key, val);
  else if (key == "critic_hidden") c.critic_hidden = parse_int_list(key, val);
  else if (key == "decoder_hidden") c.decoder_hidden = parse_int_list(key, val);
  else if (key == "decoder_identity") c.decoder_identity = parse_bool(key, val);
  else if (key == "flow_steps") c.flow_steps = parse_int(key, val);
  else if (key == "m_draws") c.m_draws = parse_int(key, val);
  else if (key == "explore_k") c.explore_k = parse_int(key, val);
  else if (key == "explore_eta") c.explore_eta = parse_double(key, val);
  else if (key == "explore_noise") c.explore_noise = parse_double(key, val);
  else if (key == "explore_tau") c.explore_tau = parse_double(key, val);
  else if (key == "gamma") c.gamma = parse_double(key, val);
  else if (key == "gae_lambda") c.gae_lambda = parse_double(key, val);
  else if (key == "beta") c.beta = parse_double(key, val);
  else if (key == "clip_eps") c.clip_eps = parse_double(key, val);
  else if (key == "z_max") c.z_max = parse_double(key, val);
  else if (key == "sigma_floor") c.sigma_floor = parse_double(key, val);
  else if (key == "ensemble_m") c.ensemble_m = parse_int(key, val);
  else if (key == "polyak_tau") c.polyak_tau = parse_double(key, val);
  else if (key == "buffer_window") c.buffer_window = parse_int(key, val);
  else if (key == "t_rollout") c.t_rollout = parse_int(key, val);
  else if (key == "k_update") c.k_update = parse_int(key, val);
  else if (key == "batch_size") c.batch_size = parse_int(key, val);
  else if (key == "actor_lr") c.actor_lr = parse_double(key, val);
  else if (key == "critic_lr") c.critic_lr = parse_double(key, val);
  else if (key == "max_grad_norm") c.max_grad_norm = parse_double(key, val);
  else if (key == "total_ticks") c.total_ticks = parse_i64(key, val);
  else if (key == "eval_interval") c.eval_interval = parse_i64(key, val);
  else if (key == "eval_episodes") c.eval_episodes = parse_int(key, val);
  else if (key == "bc_epochs") c.bc_epochs = parse_int(key, val);
  else if (key == "bc_batch") c.bc_batch = parse_int(key, val);
  else if (key == "bc_lr") c.bc_lr = parse_double(key, val);
  else if (key == "decoder_epochs") c.decoder_epochs = parse_int(key, val);
  else if (key == "demo_episodes") c.demo_episodes = parse_int(key, val);
  else if (key == "demo_noise") c.demo_noise = parse_double(key, val);
  else if (key == "demo_angle_bias") c.demo_angle_bias = parse_double(key, val);
  else if (key == "rwfm_temperature") c.rwfm_temperature = parse_double(key, val);
  else if (key == "gppo_init_sigma") c.gppo_init_sigma = parse_double(key, val);
  else if (key == "no_ratio") c.no_ratio = parse_bool(key, val);
  else if (key == "no_clip") c.no_clip = parse_bool(key, val);
  else if (key == "k1_explore") c.k1_explore = parse_bool(key, val);
  else if (key == "single_critic") c.single_critic = parse_bool(key, val);
  else if (key == "dump_buffer") c.dump_buffer = parse_bool(key, val);
  else fail_arg("unknown config key '" + key + "'");
}

}  // namespace

std::string config_text(const TrainerConfig& c) {
  std::string out;
  auto kv = [&out](const std::string& k, const std::string& v) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  };
  kv("algo", algo_name(c.algo));
  kv("env", env_kind_name(c.env));
  kv("reward_mode", reward_mode_name(c.reward_mode));
  kv("seed", std::to_string(c.seed));
  kv("num_envs", std::to_string(c.num_envs));
  kv("chunk_len", std::to_string(c.chunk_len));
  kv("max_episode_ticks", std::to_string(c.max_episode_ticks));
  kv("goal_tol", fmt_double(c.goal_tol));
  kv("actor_hidden", fmt_ints(c.actor_hidden));
  kv("critic_hidden", fmt_ints(c.critic_hidden));
  kv("decoder_hidden", fmt_ints(c.decoder_hidden));
  kv("decoder_identity", c.decoder_identity ? "true" : "false");
  kv("flow_steps", std::to_string(c.flow_steps));
  kv("m_draws", std::to_string(c.m_draws));
  kv("explore_k", std::to_string(c.explore_k));
  kv("explore_eta", fmt_double(c.explore_eta));
  kv("explore_noise", fmt_double(c.explore_noise));
  kv("explore_tau", fmt_double(c.explore_tau));
  kv("gamma", fmt_double(c.gamma));
  kv("gae_lambda", fmt_double(c.gae_lambda));
  kv("beta", fmt_double(c.beta));
  kv("clip_eps", fmt_double(c.clip_eps));
  kv("z_max", fmt_double(c.z_max));
  kv("sigma_floor", fmt_double(c.sigma_floor));
  kv("ensemble_m", std::to_string(c.ensemble_m));
  kv("polyak_tau", fmt_double(c.polyak_tau));
  kv("buffer_window", std::to_string(c.buffer_window));
  kv("t_rollout", std::to_string(c.t_rollout));
  kv("k_update", std::to_string(c.k_update));
  kv("batch_size", std::to_string(c.batch_size));
  kv("actor_lr", fmt_double(c.actor_lr));
  kv("critic_lr", fmt_double(c.critic_lr));
  kv("max_grad_norm", fmt_double(c.max_grad_norm));
  kv("total_ticks", std::to_string(c.total_ticks));
  kv("eval_interval", std::to_string(c.eval_interval));
  kv("eval_episodes", std::to_string(c.eval_episodes));
  kv("bc_epochs", std::to_string(c.bc_epochs));
  kv("bc_batch", std::to_string(c.bc_batch));
  kv("bc_lr", fmt_double(c.bc_lr));
  kv("decoder_epochs", std::to_string(c.decoder_epochs));
  kv("demo_episodes", std::to_string(c.demo_episodes));
  kv("demo_noise", fmt_double(c.demo_noise));
  kv("demo_angle_bias", fmt_double(c.demo_angle_bias));
  kv("rwfm_temperature", fmt_double(c.rwfm_temperature));
  kv("gppo_init_sigma", fmt_double(c.gppo_init_sigma));
  kv("no_ratio", c.no_ratio ? "true" : "false");
  kv("no_clip", c.no_clip ? "true" : "false");
  kv("k1_explore", c.k1_explore ? "true" : "false");
  kv("single_critic", c.single_critic ? "true" : "false");
  kv("dump_buffer", c.dump_buffer ? "true" : "false");
  return out;
}

std::uint64_t config_hash(const TrainerConfig& cfg) {
  return fnv1a64(config_text(cfg));
}

TrainerConfig parse_config_text(const std::string& text) {
  TrainerConfig cfg;
  std::vector<std::string> errors;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      errors.push_back("line " + std::to_string(lineno) + ": expected key=value, got '" + line + "'");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    try {
      apply_kv(cfg, key, val);
    } catch (const std::exception& e) {
      errors.push_back("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!errors.empty()) {
    std::string msg = "config parse failed:";
    for (const auto& e : errors) msg += "\n  " + e;
    fail_arg(msg);
  }
  validate_config(cfg);
  return cfg;
}

TrainerConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_arg("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

void save_config(const TrainerConfig& cfg, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write config file '" + path + "'");
  out << config_text(cfg);
  if (!out) fail("write failed for config file '" + path + "'");
}

void validate_config(const TrainerConfig& c) {
  std::vector<std::string> errs;
  auto check = [&errs](bool ok, const std::string& name,
                       const std::string& value, const std::string& range) {
    if (!ok) errs.push_back(name + "=" + value + " (allowed: " + range + ")");
  };
  check(c.num_envs >= 1, "num_envs", std::to_string(c.num_envs), ">= 1");
  check(c.chunk_len >= 1, "chunk_len", std::to_string(c.chunk_len), ">= 1");
  check(c.max_episode_ticks >= 0, "max_episode_ticks",
        std::to_string(c.max_episode_ticks), ">= 0");
  check(c.goal_tol > 0.0, "goal_tol", fmt_double(c.goal_tol), "> 0");
  check(!c.actor_hidden.empty(), "actor_hidden", fmt_ints(c.actor_hidden), "non-empty");
  for (int h : c.actor_hidden)
    check(h >= 1, "actor_hidden", fmt_ints(c.actor_hidden), "each >= 1");
  for (int h : c.critic_hidden)
    check(h >= 1, "critic_hidden", fmt_ints(c.critic_hidden), "each >= 1");
  for (int h : c.decoder_hidden)
    check(h >= 1, "decoder_hidden", fmt_ints(c.decoder_hidden), "each >= 1");
  check(c.flow_steps >= 1, "flow_steps", std::to_string(c.flow_steps), ">= 1");
  check(c.m_draws >= 1, "m_draws", std::to_string(c.m_draws), ">= 1");
  check(c.explore_k >= 0, "explore_k", std::to_string(c.explore_k), ">= 0");
  check(c.explore_eta >= 0.0, "explore_eta", fmt_double(c.explore_eta), ">= 0");
  check(c.explore_noise >= 0.0, "explore_noise", fmt_double(c.explore_noise), ">= 0");
  check(c.explore_tau >= 0.0 && c.explore_tau <= 1.0, "explore_tau",
        fmt_double(c.explore_tau), "[0,1]");
  check(c.gamma > 0.0 && c.gamma < 1.0, "gamma", fmt_double(c.gamma), "(0,1)");
  check(c.gae_lambda >= 0.0 && c.gae_lambda <= 1.0, "gae_lambda",
        fmt_double(c.gae_lambda), "[0,1]");
  check(c.beta > 0.0, "beta", fmt_double(c.beta), "> 0");
  check(c.clip_eps > 0.0 && c.clip_eps < 1.0, "clip_eps",
        fmt_double(c.clip_eps), "(0,1)");
  check(c.z_max > 0.0, "z_max", fmt_double(c.z_max), "> 0");
  check(c.sigma_floor > 0.0, "sigma_floor", fmt_double(c.sigma_floor), "> 0");
  check(c.ensemble_m >= 1, "ensemble_m", std::to_string(c.ensemble_m), ">= 1");
  check(c.polyak_tau > 0.0 && c.polyak_tau <= 1.0, "polyak_tau",
        fmt_double(c.polyak_tau), "(0,1]");
  check(c.buffer_window >= 1, "buffer_window",
        std::to_string(c.buffer_window), ">= 1");
  check(c.t_rollout >= 0, "t_rollout", std::to_string(c.t_rollout), ">= 0");
  check(c.k_update >= 0, "k_update", std::to_string(c.k_update), ">= 0");
  check(c.batch_size >= 1, "batch_size", std::to_string(c.batch_size), ">= 1");
  check(c.actor_lr >= 0.0, "actor_lr", fmt_double(c.actor_lr), ">= 0");
  check(c.critic_lr >= 0.0, "critic_lr", fmt_double(c.critic_lr), ">= 0");
  check(c.max_grad_norm > 0.0, "max_grad_norm", fmt_double(c.max_grad_norm), "> 0");
  check(c.total_ticks >= 0, "total_ticks", std::to_string(c.total_ticks), ">= 0");
  check(c.eval_interval >= 1, "eval_interval",
        std::to_string(c.eval_interval), ">= 1");
  check(c.eval_episodes >= 1, "eval_episodes",
        std::to_string(c.eval_episodes), ">= 1");
  check(c.bc_epochs >= 0, "bc_epochs", std::to_string(c.bc_epochs), ">= 0");
  check(c.bc_batch >= 1, "bc_batch", std::to_string(c.bc_batch), ">= 1");
  check(c.bc_lr >= 0.0, "bc_lr", fmt_double(c.bc_lr), ">= 0");
  check(c.decoder_epochs >= 0, "decoder_epochs",
        std::to_string(c.decoder_epochs), ">= 0");
  check(c.demo_episodes >= 1, "demo_episodes",
        std::to_string(c.demo_episodes), ">= 1");
  check(c.demo_noise >= 0.0, "demo_noise", fmt_double(c.demo_noise), ">= 0");
  check(c.rwfm_temperature > 0.0, "rwfm_temperature",
        fmt_double(c.rwfm_temperature), "> 0");
  check(c.gppo_init_sigma > 0.0, "gppo_init_sigma",
        fmt_double(c.gppo_init_sigma), "> 0");
  if (!errs.empty()) {
    std::string msg = "config validation failed:";
    for (const auto& e : errs) msg += "\n  " + e;
    fail_arg(msg);
  }
}

}  // namespace fpo
