#pragma once

#include <span>
#include <vector>

#include "common.hpp"
#include "mlp.hpp"
#include "rng.hpp"

namespace fpo {

// Diagonal Gaussian over the latent space: mean from an Mlp on s, one free
// state-independent log-std per dimension. This is the tractable-likelihood
// reference policy; its PPO ratios are exact log-density ratios.
class GaussianPolicy {
 public:
  GaussianPolicy(int state_dim, int latent_dim,
                 const std::vector<int>& hidden, double init_sigma, Rng& rng);

  int state_dim() const { return state_dim_; }
  int latent_dim() const { return latent_dim_; }

  Vec mean(std::span<const double> s) const;
  Vec sample(std::span<const double> s, Rng& rng) const;
  double log_prob(std::span<const double> s, std::span<const double> x) const;
  // Sum over dims of log sigma + 0.5*log(2*pi*e); state independent.
  double entropy() const;

  // Flat layout [mean-net params..., log_std...].
  std::size_t param_count() const;
  void get_params(std::span<double> out) const;
  void set_params(std::span<const double> in);
  // Accumulates weight * d(log_prob)/d(params) into grad (flat layout).
  void log_prob_grad(std::span<const double> s, std::span<const double> x,
                     double weight, std::span<double> grad) const;

  void clamp_log_std(double lo, double hi);
  std::span<const double> log_std() const { return log_std_; }

  const Mlp& mean_net() const { return mean_net_; }
  Mlp& mean_net_mutable() { return mean_net_; }
  Vec& log_std_mutable() { return log_std_; }

 private:
  int state_dim_;
  int latent_dim_;
  Mlp mean_net_;
  Vec log_std_;
};

}  // namespace fpo
