#include "gaussian_policy.hpp"

#include <algorithm>
#include <cmath>

namespace fpo {

namespace {

std::vector<int> mean_layers(int state_dim, int latent_dim,
                             const std::vector<int>& hidden) {
  std::vector<int> layers;
  layers.push_back(state_dim);
  for (int h : hidden) layers.push_back(h);
  layers.push_back(latent_dim);
  return layers;
}

}  // namespace

GaussianPolicy::GaussianPolicy(int state_dim, int latent_dim,
                               const std::vector<int>& hidden,
                               double init_sigma, Rng& rng)
    : state_dim_(state_dim),
      latent_dim_(latent_dim),
      mean_net_(Mlp::random(mean_layers(state_dim, latent_dim, hidden),
                            Activation::kTanh, rng)),
      log_std_(static_cast<std::size_t>(latent_dim), std::log(init_sigma)) {
  if (state_dim < 1 || latent_dim < 1) fail_arg("GaussianPolicy: bad dims");
  if (!(init_sigma > 0.0)) fail_arg("GaussianPolicy: init_sigma must be positive");
}

Vec GaussianPolicy::mean(std::span<const double> s) const {
  return mean_net_.forward(s);
}

Vec GaussianPolicy::sample(std::span<const double> s, Rng& rng) const {
  Vec x = mean_net_.forward(s);
  for (int j = 0; j < latent_dim_; ++j)
    x[static_cast<std::size_t>(j)] +=
        std::exp(log_std_[static_cast<std::size_t>(j)]) * rng.normal();
  if (!all_finite(x)) fail("GaussianPolicy: non-finite sample");
  return x;
}

double GaussianPolicy::log_prob(std::span<const double> s,
                                std::span<const double> x) const {
  if (static_cast<int>(x.size()) != latent_dim_)
    fail_arg("log_prob: latent dimension mismatch");
  const Vec mu = mean_net_.forward(s);
  constexpr double kLog2Pi = 1.8378770664093453;
  double lp = 0.0;
  for (int j = 0; j < latent_dim_; ++j) {
    const auto k = static_cast<std::size_t>(j);
    const double sd = std::exp(log_std_[k]);
    const double z = (x[k] - mu[k]) / sd;
    lp += -0.5 * z * z - log_std_[k] - 0.5 * kLog2Pi;
  }
  if (!std::isfinite(lp)) fail("log_prob: non-finite density");
  return lp;
}

double GaussianPolicy::entropy() const {
  constexpr double kHalfLog2PiE = 1.4189385332046727;
  double h = 0.0;
  for (double ls : log_std_) h += ls + kHalfLog2PiE;
  return h;
}

std::size_t GaussianPolicy::param_count() const {
  return mean_net_.params().size() + log_std_.size();
}

void GaussianPolicy::get_params(std::span<double> out) const {
  if (out.size() != param_count()) fail_arg("get_params: size mismatch");
  const auto& net = mean_net_.params();
  std::copy(net.begin(), net.end(), out.begin());
  std::copy(log_std_.begin(), log_std_.end(), out.begin() + net.size());
}

void GaussianPolicy::set_params(std::span<const double> in) {
  if (in.size() != param_count()) fail_arg("set_params: size mismatch");
  auto& net = mean_net_.params();
  std::copy(in.begin(), in.begin() + net.size(), net.begin());
  std::copy(in.begin() + net.size(), in.end(), log_std_.begin());
}

void GaussianPolicy::log_prob_grad(std::span<const double> s,
                                   std::span<const double> x, double weight,
                                   std::span<double> grad) const {
  if (grad.size() != param_count()) fail_arg("log_prob_grad: size mismatch");
  const Vec mu = mean_net_.forward(s);
  const std::size_t net_n = mean_net_.params().size();
  Vec upstream(static_cast<std::size_t>(latent_dim_));
  for (int j = 0; j < latent_dim_; ++j) {
    const auto k = static_cast<std::size_t>(j);
    const double var = std::exp(2.0 * log_std_[k]);
    const double diff = x[k] - mu[k];
    upstream[k] = weight * diff / var;
    grad[net_n + k] += weight * (diff * diff / var - 1.0);
  }
  mean_net_.backward(s, upstream, grad.subspan(0, net_n));
}

void GaussianPolicy::clamp_log_std(double lo, double hi) {
  for (double& ls : log_std_) ls = std::clamp(ls, lo, hi);
}

}  // namespace fpo
