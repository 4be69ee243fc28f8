#include "flow_actor.hpp"

#include <cmath>
#include <string>

namespace fpo {

FlowActor::FlowActor(int state_dim, int latent_dim, std::vector<int> hidden,
                     int flow_steps, ExploreConfig explore, Rng& init_rng)
    : state_dim_(state_dim),
      latent_dim_(latent_dim),
      flow_steps_(flow_steps),
      explore_(explore) {
  if (state_dim <= 0 || latent_dim <= 0) fail_arg("FlowActor: bad dims");
  if (flow_steps < 1) fail_arg("FlowActor: flow_steps must be >= 1");
  if (explore_.steps < 0) fail_arg("FlowActor: explore steps must be >= 0");
  if (explore_.step_size <= 0.0) fail_arg("FlowActor: explore step_size must be > 0");
  if (explore_.noise < 0.0) fail_arg("FlowActor: explore noise must be >= 0");
  std::vector<int> sizes;
  sizes.push_back(state_dim + latent_dim + 1);
  for (int h : hidden) sizes.push_back(h);
  sizes.push_back(latent_dim);
  net_ = Mlp::random(std::move(sizes), Activation::kTanh, init_rng);
}

FlowActor::FlowActor(int state_dim, int latent_dim, Mlp velocity_net,
                     int flow_steps, ExploreConfig explore)
    : state_dim_(state_dim),
      latent_dim_(latent_dim),
      flow_steps_(flow_steps),
      explore_(explore),
      net_(std::move(velocity_net)) {
  if (net_.input_dim() != state_dim + latent_dim + 1)
    fail_arg("FlowActor: velocity net input dim != d + D + 1");
  if (net_.output_dim() != latent_dim)
    fail_arg("FlowActor: velocity net output dim != latent dim");
  if (flow_steps < 1) fail_arg("FlowActor: flow_steps must be >= 1");
}

void FlowActor::fill_input(std::span<const double> s,
                           std::span<const double> x, double tau,
                           Vec& buf) const {
  if (static_cast<int>(s.size()) != state_dim_)
    fail_arg("FlowActor: state dim " + std::to_string(s.size()) + " != " +
             std::to_string(state_dim_));
  if (static_cast<int>(x.size()) != latent_dim_)
    fail_arg("FlowActor: latent dim " + std::to_string(x.size()) + " != " +
             std::to_string(latent_dim_));
  buf.resize(s.size() + x.size() + 1);
  std::size_t k = 0;
  for (double v : s) buf[k++] = v;
  for (double v : x) buf[k++] = v;
  buf[k] = tau;
}

Vec FlowActor::velocity(std::span<const double> x, double tau,
                        std::span<const double> s) const {
  Vec in;
  fill_input(s, x, tau, in);
  return net_.forward(in);
}

double FlowActor::cfm_loss(std::span<const double> s,
                           std::span<const double> x1,
                           std::span<const CfmSample> draws) const {
  if (draws.empty()) fail_arg("cfm_loss: empty draw list");
  const int d = latent_dim_;
  Vec in, xt(static_cast<std::size_t>(d));
  double acc = 0.0;
  for (const CfmSample& dr : draws) {
    if (static_cast<int>(dr.x0.size()) != d)
      fail_arg("cfm_loss: draw latent dim mismatch");
    for (int i = 0; i < d; ++i)
      xt[i] = (1.0 - dr.tau) * dr.x0[i] + dr.tau * x1[i];
    fill_input(s, xt, dr.tau, in);
    const Vec v = net_.forward(in);
    for (int i = 0; i < d; ++i) {
      const double r = v[i] - (x1[i] - dr.x0[i]);
      acc += r * r;
    }
  }
  const double loss = acc / static_cast<double>(draws.size());
  if (!std::isfinite(loss)) fail("cfm_loss: non-finite loss");
  return loss;
}

double FlowActor::cfm_loss_grad(std::span<const double> s,
                                std::span<const double> x1,
                                std::span<const CfmSample> draws, double weight,
                                std::span<double> param_grad) const {
  if (draws.empty()) fail_arg("cfm_loss_grad: empty draw list");
  if (param_grad.size() != net_.param_count())
    fail_arg("cfm_loss_grad: gradient buffer size mismatch");
  const int d = latent_dim_;
  const double inv_n = 1.0 / static_cast<double>(draws.size());
  Vec in, xt(static_cast<std::size_t>(d)), up(static_cast<std::size_t>(d));
  double acc = 0.0;
  for (const CfmSample& dr : draws) {
    if (static_cast<int>(dr.x0.size()) != d)
      fail_arg("cfm_loss_grad: draw latent dim mismatch");
    for (int i = 0; i < d; ++i)
      xt[i] = (1.0 - dr.tau) * dr.x0[i] + dr.tau * x1[i];
    fill_input(s, xt, dr.tau, in);
    const Vec v = net_.forward(in);
    for (int i = 0; i < d; ++i) {
      const double r = v[i] - (x1[i] - dr.x0[i]);
      acc += r * r;
      up[i] = weight * 2.0 * r * inv_n;
    }
    net_.backward(in, up, param_grad);
  }
  const double loss = acc * inv_n;
  if (!std::isfinite(loss)) fail("cfm_loss_grad: non-finite loss");
  return loss;
}

std::pair<Vec, Vec> FlowActor::sample_latent(std::span<const double> s,
                                             Rng& rng) const {
  Vec x0(static_cast<std::size_t>(latent_dim_));
  rng.normal_fill(x0);
  Vec x = x0;
  const double h = 1.0 / static_cast<double>(flow_steps_);
  Vec in;
  for (int k = 0; k < flow_steps_; ++k) {
    const double u = static_cast<double>(k) * h;
    fill_input(s, x, u, in);
    const Vec v = net_.forward(in);
    for (int i = 0; i < latent_dim_; ++i) x[i] += h * v[i];
    if (!all_finite(x))
      fail("sample_latent: non-finite latent at Euler step " +
           std::to_string(k));
  }
  return {std::move(x), std::move(x0)};
}

Vec FlowActor::explore(Vec x, std::span<const double> s, Rng& rng) const {
  Vec in;
  for (int k = 0; k < explore_.steps; ++k) {
    fill_input(s, x, explore_.flow_time, in);
    const Vec v = net_.forward(in);
    for (int i = 0; i < latent_dim_; ++i) x[i] += explore_.step_size * v[i];
    if (explore_.noise > 0.0) {
      for (int i = 0; i < latent_dim_; ++i)
        x[i] += explore_.noise * rng.normal();
    }
    if (!all_finite(x))
      fail("explore: non-finite latent at step " + std::to_string(k));
  }
  return x;
}

std::vector<CfmSample> FlowActor::draw_cfm_samples(int m, Rng& rng) const {
  if (m < 1) fail_arg("draw_cfm_samples: m must be >= 1");
  std::vector<CfmSample> draws(static_cast<std::size_t>(m));
  for (CfmSample& dr : draws) {
    dr.x0.resize(static_cast<std::size_t>(latent_dim_));
    rng.normal_fill(dr.x0);
    dr.tau = rng.uniform(kCfmTauLo, kCfmTauHi);
  }
  return draws;
}

Vec actor_grad_from_ratio(const FlowActor& actor,
                          std::span<const CfmBatchItem> items) {
  Vec grad(actor.net().param_count(), 0.0);
  for (const CfmBatchItem& it : items) {
    if (it.draws.empty())
      fail_arg("actor_grad_from_ratio: element missing cached draws");
    if (it.weight == 0.0) continue;
    actor.cfm_loss_grad(it.state, it.latent, it.draws, it.weight, grad);
  }
  return grad;
}

}  // namespace fpo
