#include "envlab.hpp"

#include <algorithm>
#include <cmath>

namespace fpo {

namespace {

double dist2d(double ax, double ay, double bx, double by) {
  return std::hypot(ax - bx, ay - by);
}

double clip1(double v) { return std::clamp(v, -1.0, 1.0); }

}  // namespace

Env::Env(int chunk_len, int max_ticks, double goal_tol, RewardMode mode)
    : chunk_len_(chunk_len),
      max_ticks_(max_ticks),
      goal_tol_(goal_tol),
      reward_mode_(mode) {
  if (chunk_len < 1) fail_arg("Env: chunk_len must be >= 1");
  if (max_ticks < 0) fail_arg("Env: max_ticks must be >= 0");
  if (!(goal_tol > 0.0)) fail_arg("Env: goal_tol must be positive");
}

void Env::reset_pinned(const Vec& full_state) {
  if (static_cast<int>(full_state.size()) != state_dim())
    fail_arg("reset_pinned: state dimension mismatch");
  state_ = full_state;
  tick_ = 0;
  done_ = false;
  truncated_ = false;
}

StepResult Env::step(std::span<const double> action) {
  if (static_cast<int>(action.size()) != action_dim())
    fail_arg("step: action dimension mismatch");
  if (state_.empty()) fail("step: reset must be called first");
  if (episode_over()) fail("step: episode already over");

  Vec a(action.begin(), action.end());
  for (double& v : a) v = clip1(v);
  const double dist_before = goal_distance(state_);
  advance(a);
  ++tick_;

  StepResult res;
  res.done = at_goal(state_);
  res.truncated = !res.done && tick_ >= max_ticks_;
  if (reward_mode_ == RewardMode::kSparse) {
    res.r = res.done ? 1.0 : 0.0;
  } else {
    const double dist_after = goal_distance(state_);
    res.r = (dist_before - dist_after) + (res.done ? 1.0 : 0.0);
  }
  res.s_next = state_;
  done_ = res.done;
  truncated_ = res.truncated;
  return res;
}

PointReachEnv::PointReachEnv(int chunk_len, int max_ticks, double goal_tol,
                             RewardMode mode)
    : Env(chunk_len, max_ticks, goal_tol, mode) {}

Vec PointReachEnv::reset(Rng& rng) {
  Vec s(6, 0.0);
  s[0] = rng.uniform(-1.0, 1.0);
  s[1] = rng.uniform(-1.0, 1.0);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    s[4] = rng.uniform(-1.0, 1.0);
    s[5] = rng.uniform(-1.0, 1.0);
    if (dist2d(s[0], s[1], s[4], s[5]) > 2.0 * goal_tol_) break;
  }
  state_ = s;
  tick_ = 0;
  done_ = false;
  truncated_ = false;
  return state_;
}

bool PointReachEnv::at_goal(const Vec& s) const {
  return dist2d(s[0], s[1], s[4], s[5]) <= goal_tol_;
}

double PointReachEnv::goal_distance(const Vec& s) const {
  return dist2d(s[0], s[1], s[4], s[5]);
}

void PointReachEnv::advance(const Vec& a) {
  for (int i = 0; i < 2; ++i) {
    state_[2 + i] = std::clamp(state_[2 + i] + kDt * a[i], -kVelCap, kVelCap);
  }
  for (int i = 0; i < 2; ++i) {
    double p = state_[i] + kDt * state_[2 + i];
    if (p > kPosClamp || p < -kPosClamp) {
      p = std::clamp(p, -kPosClamp, kPosClamp);
      state_[2 + i] = 0.0;
    }
    state_[i] = p;
  }
}

Vec PointReachEnv::expert_action(const Vec& s) const {
  constexpr double kp = 4.0;
  constexpr double kd = 3.0;
  Vec a(2);
  for (int i = 0; i < 2; ++i)
    a[i] = clip1(kp * (s[4 + i] - s[i]) - kd * s[2 + i]);
  return a;
}

PushBlockEnv::PushBlockEnv(int chunk_len, int max_ticks, double goal_tol,
                           RewardMode mode)
    : Env(chunk_len, max_ticks, goal_tol, mode) {}

Vec PushBlockEnv::reset(Rng& rng) {
  Vec s(8, 0.0);
  s[4] = rng.uniform(-0.6, 0.6);
  s[5] = rng.uniform(-0.6, 0.6);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    s[0] = rng.uniform(-1.0, 1.0);
    s[1] = rng.uniform(-1.0, 1.0);
    if (dist2d(s[0], s[1], s[4], s[5]) > 2.0 * kContactRadius) break;
  }
  for (int attempt = 0; attempt < 1000; ++attempt) {
    s[6] = rng.uniform(-0.9, 0.9);
    s[7] = rng.uniform(-0.9, 0.9);
    if (dist2d(s[4], s[5], s[6], s[7]) > 3.0 * goal_tol_) break;
  }
  state_ = s;
  tick_ = 0;
  done_ = false;
  truncated_ = false;
  return state_;
}

bool PushBlockEnv::at_goal(const Vec& s) const {
  return dist2d(s[4], s[5], s[6], s[7]) <= goal_tol_;
}

double PushBlockEnv::goal_distance(const Vec& s) const {
  return dist2d(s[4], s[5], s[6], s[7]) +
         0.25 * dist2d(s[0], s[1], s[4], s[5]);
}

void PushBlockEnv::advance(const Vec& a) {
  for (int i = 0; i < 2; ++i) {
    state_[2 + i] = std::clamp(state_[2 + i] + kDt * a[i], -kVelCap, kVelCap);
  }
  for (int i = 0; i < 2; ++i) {
    double p = state_[i] + kDt * state_[2 + i];
    if (p > kPosClamp || p < -kPosClamp) {
      p = std::clamp(p, -kPosClamp, kPosClamp);
      state_[2 + i] = 0.0;
    }
    state_[i] = p;
  }
  const double d = dist2d(state_[0], state_[1], state_[4], state_[5]);
  if (d < kContactRadius) {
    double nx = 1.0;
    double ny = 0.0;
    if (d > 1e-12) {
      nx = (state_[4] - state_[0]) / d;
      ny = (state_[5] - state_[1]) / d;
    }
    state_[4] = std::clamp(state_[0] + nx * kContactRadius, -kPosClamp, kPosClamp);
    state_[5] = std::clamp(state_[1] + ny * kContactRadius, -kPosClamp, kPosClamp);
  }
}

Vec PushBlockEnv::expert_action(const Vec& s) const {
  constexpr double kp = 4.0;
  constexpr double kd = 3.0;
  const double bx = s[4];
  const double by = s[5];
  double ux = s[6] - bx;
  double uy = s[7] - by;
  const double goal_d = std::hypot(ux, uy);
  if (goal_d > 1e-12) {
    ux /= goal_d;
    uy /= goal_d;
  } else {
    ux = 1.0;
    uy = 0.0;
  }
  // Contact point slightly inside the block so the overlap projection keeps
  // shoving it toward the goal.
  double tx = bx - ux * (kContactRadius - 0.06);
  double ty = by - uy * (kContactRadius - 0.06);
  // If the agent is on the wrong side, detour via a standoff point behind
  // the block, sidestepped perpendicular to the push line.
  const double rx = bx - s[0];
  const double ry = by - s[1];
  const double rd = std::hypot(rx, ry);
  const double behind = rd > 1e-12 ? (rx * ux + ry * uy) / rd : 1.0;
  if (behind < 0.55 && rd < 2.5 * kContactRadius) {
    const double side = (rx * uy - ry * ux) >= 0.0 ? 1.0 : -1.0;
    tx = bx - ux * 2.5 * kContactRadius - side * uy * 2.5 * kContactRadius;
    ty = by - uy * 2.5 * kContactRadius + side * ux * 2.5 * kContactRadius;
  } else if (behind < 0.55) {
    tx = bx - ux * 2.5 * kContactRadius;
    ty = by - uy * 2.5 * kContactRadius;
  }
  Vec a(2);
  a[0] = clip1(kp * (tx - s[0]) - kd * s[2]);
  a[1] = clip1(kp * (ty - s[1]) - kd * s[3]);
  return a;
}

std::unique_ptr<Env> make_env(EnvKind kind, int chunk_len, int max_ticks,
                              double goal_tol, RewardMode mode) {
  switch (kind) {
    case EnvKind::kPointReach:
      return std::make_unique<PointReachEnv>(chunk_len, max_ticks, goal_tol, mode);
    case EnvKind::kPushBlock:
      return std::make_unique<PushBlockEnv>(chunk_len, max_ticks, goal_tol, mode);
  }
  fail_arg("make_env: unknown kind");
}

EnvKind parse_env_kind(const std::string& name) {
  if (name == "pointreach") return EnvKind::kPointReach;
  if (name == "pushblock") return EnvKind::kPushBlock;
  fail_arg("unknown env '" + name + "' (expected pointreach|pushblock)");
}

std::string env_kind_name(EnvKind kind) {
  return kind == EnvKind::kPointReach ? "pointreach" : "pushblock";
}

BaseDecoder::BaseDecoder(int state_dim, int action_dim, int chunk_len)
    : state_dim_(state_dim), action_dim_(action_dim), chunk_len_(chunk_len) {
  if (state_dim < 1 || action_dim < 1 || chunk_len < 1)
    fail_arg("BaseDecoder: bad dims");
}

BaseDecoder BaseDecoder::identity(int state_dim, int action_dim,
                                  int chunk_len) {
  BaseDecoder dec(state_dim, action_dim, chunk_len);
  dec.frozen_ = true;
  return dec;
}

BaseDecoder BaseDecoder::network(Mlp net, int state_dim, int action_dim,
                                 int chunk_len) {
  BaseDecoder dec(state_dim, action_dim, chunk_len);
  const auto& layers = net.layer_sizes();
  if (layers.front() != state_dim + action_dim * chunk_len)
    fail_arg("BaseDecoder: net input dim mismatch");
  if (layers.back() != action_dim * chunk_len)
    fail_arg("BaseDecoder: net output dim mismatch");
  dec.net_ = std::move(net);
  return dec;
}

Vec BaseDecoder::decode_flat(std::span<const double> s,
                             std::span<const double> x) const {
  if (static_cast<int>(s.size()) != state_dim_)
    fail_arg("decode: state dimension mismatch");
  if (static_cast<int>(x.size()) != latent_dim())
    fail_arg("decode: latent dimension mismatch");
  Vec out;
  if (!net_) {
    out.assign(x.begin(), x.end());
  } else {
    Vec in(s.begin(), s.end());
    in.insert(in.end(), x.begin(), x.end());
    out = net_->forward(in);
  }
  for (double& v : out) v = clip1(v);
  if (!all_finite(out)) fail("decode: non-finite action");
  return out;
}

const Mlp& BaseDecoder::net() const {
  if (!net_) fail("BaseDecoder: identity mode has no net");
  return *net_;
}

Mlp& BaseDecoder::net_mutable() {
  if (!net_) fail("BaseDecoder: identity mode has no net");
  if (frozen_) fail("BaseDecoder: frozen, parameters are immutable");
  return *net_;
}

void BaseDecoder::freeze() {
  if (frozen_) return;
  if (net_) {
    auto p = net_->params();
    hash_ = fnv1a64(p.data(), p.size() * sizeof(double));
  }
  frozen_ = true;
}

void BaseDecoder::check_frozen() const {
  if (!frozen_) fail("BaseDecoder: check_frozen before freeze");
  if (!net_) return;
  auto p = net_->params();
  const std::uint64_t h = fnv1a64(p.data(), p.size() * sizeof(double));
  if (h != hash_)
    fail("BaseDecoder: frozen parameters changed (hash " + hex64(hash_) +
         " -> " + hex64(h) + ")");
}

Vec lift_chunk(const std::vector<Vec>& chunk) {
  Vec x;
  for (const auto& a : chunk) x.insert(x.end(), a.begin(), a.end());
  return x;
}

DemoEpisode scripted_demo(Env& env, DemoQuality quality, Rng& rng,
                          double angle_bias, double action_noise) {
  DemoEpisode ep;
  env.reset(rng);
  const int h = env.chunk_len();
  const bool rotate =
      quality == DemoQuality::kSuboptimal && env.action_dim() == 2;
  const double cb = std::cos(angle_bias);
  const double sb = std::sin(angle_bias);
  while (!env.episode_over() && env.tick() < env.max_ticks()) {
    DemoStep step;
    step.s = env.state();
    Vec chunk_flat;
    chunk_flat.reserve(static_cast<std::size_t>(h) * env.action_dim());
    int executed = 0;
    for (int k = 0; k < h && !env.episode_over(); ++k) {
      Vec a = env.expert_action(env.state());
      if (quality == DemoQuality::kSuboptimal) {
        if (rotate) {
          const double ax = a[0];
          const double ay = a[1];
          a[0] = cb * ax - sb * ay;
          a[1] = sb * ax + cb * ay;
        }
        for (double& v : a) v += action_noise * rng.normal();
      }
      for (double& v : a) v = clip1(v);
      env.step(a);
      chunk_flat.insert(chunk_flat.end(), a.begin(), a.end());
      ++executed;
    }
    if (executed == h) {
      step.chunk = std::move(chunk_flat);
      ep.steps.push_back(std::move(step));
    }
  }
  ep.success = env.episode_over() && env.at_goal(env.state());
  ep.ticks = env.tick();
  return ep;
}

}  // namespace fpo
