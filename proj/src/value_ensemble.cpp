#include "value_ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fpo {

namespace {

std::vector<int> critic_layers(int state_dim, int latent_dim,
                               const std::vector<int>& hidden) {
  std::vector<int> layers;
  layers.push_back(state_dim + latent_dim);
  for (int h : hidden) layers.push_back(h);
  layers.push_back(1);
  return layers;
}

}  // namespace

ValueEnsemble::ValueEnsemble(int state_dim, int latent_dim,
                             const std::vector<int>& hidden, int members,
                             double gamma, double lambda, double polyak_tau,
                             Rng& rng)
    : state_dim_(state_dim),
      latent_dim_(latent_dim),
      gamma_(gamma),
      lambda_(lambda),
      polyak_tau_(polyak_tau) {
  if (state_dim <= 0 || latent_dim <= 0) fail_arg("ValueEnsemble: bad dims");
  if (members < 1) fail_arg("ValueEnsemble: members must be >= 1");
  if (!(gamma > 0.0 && gamma < 1.0)) fail_arg("ValueEnsemble: gamma must be in (0,1)");
  if (!(lambda >= 0.0 && lambda <= 1.0)) fail_arg("ValueEnsemble: lambda must be in [0,1]");
  if (!(polyak_tau > 0.0 && polyak_tau <= 1.0))
    fail_arg("ValueEnsemble: polyak_tau must be in (0,1]");
  const auto layers = critic_layers(state_dim, latent_dim, hidden);
  online_.reserve(static_cast<std::size_t>(members));
  target_.reserve(static_cast<std::size_t>(members));
  for (int i = 0; i < members; ++i) {
    Rng member_rng = rng.fork(0x51000 + static_cast<std::uint64_t>(i));
    online_.push_back(Mlp::random(layers, Activation::kTanh, member_rng));
    target_.push_back(online_.back());
  }
}

double ValueEnsemble::q_online(int i, std::span<const double> s,
                               std::span<const double> x) const {
  Vec in(s.begin(), s.end());
  in.insert(in.end(), x.begin(), x.end());
  Vec out = online_.at(static_cast<std::size_t>(i)).forward(in);
  if (!std::isfinite(out[0])) fail("ValueEnsemble: non-finite online critic output");
  return out[0];
}

double ValueEnsemble::q_target(int i, std::span<const double> s,
                               std::span<const double> x) const {
  Vec in(s.begin(), s.end());
  in.insert(in.end(), x.begin(), x.end());
  Vec out = target_.at(static_cast<std::size_t>(i)).forward(in);
  if (!std::isfinite(out[0])) fail("ValueEnsemble: non-finite target critic output");
  return out[0];
}

double ValueEnsemble::q_target_min(std::span<const double> s,
                                   std::span<const double> x) const {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < members(); ++i) best = std::min(best, q_target(i, s, x));
  return best;
}

double ValueEnsemble::td_target(double r, std::span<const double> s_next,
                                bool done, const FlowActor& actor,
                                Rng& rng) const {
  if (done) return r;
  auto [x_next, x0] = actor.sample_latent(s_next, rng);
  (void)x0;
  double y = r + gamma_ * q_target_min(s_next, x_next);
  if (!std::isfinite(y)) fail("td_target: non-finite target");
  return y;
}

double ValueEnsemble::td_target_with_latent(double r,
                                            std::span<const double> s_next,
                                            bool done,
                                            std::span<const double> x_next) const {
  if (done) return r;
  double y = r + gamma_ * q_target_min(s_next, x_next);
  if (!std::isfinite(y)) fail("td_target: non-finite target");
  return y;
}

double ValueEnsemble::critic_loss(std::span<const CriticBatchItem> batch,
                                  std::vector<Vec>& grads) const {
  if (batch.empty()) fail_arg("critic_loss: empty batch");
  if (grads.size() != online_.size()) fail_arg("critic_loss: grads size mismatch");
  for (std::size_t i = 0; i < online_.size(); ++i) {
    if (grads[i].size() != online_[i].params().size())
      fail_arg("critic_loss: grad buffer size mismatch");
  }
  const double n = static_cast<double>(batch.size());
  const double m = static_cast<double>(online_.size());
  double loss = 0.0;
  Vec in;
  Vec upstream(1);
  for (const auto& item : batch) {
    in.assign(item.state.begin(), item.state.end());
    in.insert(in.end(), item.latent.begin(), item.latent.end());
    for (std::size_t i = 0; i < online_.size(); ++i) {
      Vec out = online_[i].forward(in);
      const double err = out[0] - item.target;
      loss += err * err;
      upstream[0] = 2.0 * err / (n * m);
      online_[i].backward(in, upstream, grads[i]);
    }
  }
  loss /= n * m;
  if (!std::isfinite(loss)) fail("critic_loss: non-finite loss");
  return loss;
}

double ValueEnsemble::critic_loss(std::span<const CriticBatchItem> batch) const {
  if (batch.empty()) fail_arg("critic_loss: empty batch");
  const double n = static_cast<double>(batch.size());
  const double m = static_cast<double>(online_.size());
  double loss = 0.0;
  Vec in;
  for (const auto& item : batch) {
    in.assign(item.state.begin(), item.state.end());
    in.insert(in.end(), item.latent.begin(), item.latent.end());
    for (const auto& critic : online_) {
      Vec out = critic.forward(in);
      const double err = out[0] - item.target;
      loss += err * err;
    }
  }
  loss /= n * m;
  if (!std::isfinite(loss)) fail("critic_loss: non-finite loss");
  return loss;
}

void ValueEnsemble::polyak_update(double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) fail_arg("polyak_update: tau must be in (0,1]");
  for (std::size_t i = 0; i < online_.size(); ++i) {
    auto& tgt = target_[i].params();
    const auto& src = online_[i].params();
    // Incremental form: exact no-op when target already equals online.
    for (std::size_t k = 0; k < tgt.size(); ++k)
      tgt[k] += tau * (src[k] - tgt[k]);
  }
}

double ValueEnsemble::value_baseline(std::span<const double> s,
                                     const FlowActor& actor, Rng& rng) const {
  auto [x, x0] = actor.sample_latent(s, rng);
  (void)x0;
  return q_target_min(s, x);
}

double ValueEnsemble::value_baseline(std::span<const double> s,
                                     std::span<const double> stored_latent) const {
  return q_target_min(s, stored_latent);
}

Vec gae(std::span<const double> rewards, std::span<const double> values,
        std::span<const unsigned char> dones, double gamma, double lambda) {
  const std::size_t t_len = rewards.size();
  if (values.size() != t_len + 1) fail_arg("gae: values must have rewards.size()+1 entries");
  if (dones.size() != t_len) fail_arg("gae: dones length mismatch");
  Vec adv(t_len, 0.0);
  double next_adv = 0.0;
  for (std::size_t i = t_len; i-- > 0;) {
    const double not_done = dones[i] ? 0.0 : 1.0;
    const double delta =
        rewards[i] + gamma * values[i + 1] * not_done - values[i];
    next_adv = delta + gamma * lambda * not_done * next_adv;
    adv[i] = next_adv;
  }
  if (!all_finite(adv)) fail("gae: non-finite advantage");
  return adv;
}

}  // namespace fpo
