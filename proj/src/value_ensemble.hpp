#pragma once

#include <span>
#include <vector>

#include "common.hpp"
#include "flow_actor.hpp"
#include "mlp.hpp"
#include "rng.hpp"

namespace fpo {

struct CriticBatchItem {
  std::span<const double> state;
  std::span<const double> latent;
  double target = 0.0;  // constant during regression
};

// M action-value critics on (s, x) plus Polyak-averaged target copies.
// Bootstrap targets take the minimum across target members.
class ValueEnsemble {
 public:
  ValueEnsemble(int state_dim, int latent_dim,
                const std::vector<int>& hidden, int members, double gamma,
                double lambda, double polyak_tau, Rng& rng);

  int members() const { return static_cast<int>(online_.size()); }
  int state_dim() const { return state_dim_; }
  int latent_dim() const { return latent_dim_; }
  double gamma() const { return gamma_; }
  double lambda() const { return lambda_; }
  double polyak_tau() const { return polyak_tau_; }

  Mlp& online(int i) { return online_.at(static_cast<std::size_t>(i)); }
  const Mlp& online(int i) const { return online_.at(static_cast<std::size_t>(i)); }
  Mlp& target(int i) { return target_.at(static_cast<std::size_t>(i)); }
  const Mlp& target(int i) const { return target_.at(static_cast<std::size_t>(i)); }

  double q_online(int i, std::span<const double> s,
                  std::span<const double> x) const;
  double q_target(int i, std::span<const double> s,
                  std::span<const double> x) const;
  // min over target members at (s, x)
  double q_target_min(std::span<const double> s,
                      std::span<const double> x) const;

  // r + gamma * min_i targetQ_i(s_next, x') with x' drawn from the actor
  // (plain flow sampling, no exploration); terminal transitions return r.
  double td_target(double r, std::span<const double> s_next, bool done,
                   const FlowActor& actor, Rng& rng) const;
  // Same masking and min, next-state latent supplied by the caller.
  double td_target_with_latent(double r, std::span<const double> s_next,
                               bool done, std::span<const double> x_next) const;

  // Mean over batch and members of (Q_i(s,x) - y)^2; accumulates each
  // member's gradient into grads[i] (sized to that member's param count).
  double critic_loss(std::span<const CriticBatchItem> batch,
                     std::vector<Vec>& grads) const;
  double critic_loss(std::span<const CriticBatchItem> batch) const;

  void polyak_update(double tau);
  void polyak_update() { polyak_update(polyak_tau_); }

  // Conservative state value from a fresh actor sample.
  double value_baseline(std::span<const double> s, const FlowActor& actor,
                        Rng& rng) const;
  // Same but reusing a latent stored at rollout time.
  double value_baseline(std::span<const double> s,
                        std::span<const double> stored_latent) const;

 private:
  int state_dim_;
  int latent_dim_;
  double gamma_;
  double lambda_;
  double polyak_tau_;
  std::vector<Mlp> online_;
  std::vector<Mlp> target_;
};

// delta_t = r_t + gamma*V_{t+1}*(1-done_t) - V_t
// A_t = delta_t + gamma*lambda*(1-done_t)*A_{t+1}, A_T = 0.
// values carries one extra bootstrap entry.
Vec gae(std::span<const double> rewards, std::span<const double> values,
        std::span<const unsigned char> dones, double gamma, double lambda);

}  // namespace fpo
