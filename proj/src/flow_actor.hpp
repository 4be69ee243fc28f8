#pragma once

#include <span>
#include <utility>
#include <vector>

#include "mlp.hpp"
#include "rng.hpp"

namespace fpo {

// One Monte-Carlo draw for the per-sample CFM loss: a standard-normal source
// latent and a flow time. Frozen at creation; re-evaluating a stored
// transition's loss must reuse the identical pair.
struct CfmSample {
  Vec x0;
  double tau = 0.0;
};

struct ExploreConfig {
  int steps = 4;          // K
  double step_size = 0.05;  // eta
  double noise = 0.05;      // per-step Gaussian scale; 0 => deterministic map
  double flow_time = 1.0;   // tau^(k) fed to the velocity field
};

// Element of a weighted CFM-gradient batch: the stored (state, latent, frozen
// draws) plus the scalar dL/d(l_cfm) supplied by the ratio machinery.
struct CfmBatchItem {
  std::span<const double> state;
  std::span<const double> latent;
  std::span<const CfmSample> draws;
  double weight = 0.0;
};

// Conditional flow-matching actor: a velocity field v(x, tau | s) realized by
// an MLP on [s, x, tau], sampled by forward Euler integration from Gaussian
// noise at tau=0 to the latent at tau=1.
class FlowActor {
 public:
  FlowActor(int state_dim, int latent_dim, std::vector<int> hidden,
            int flow_steps, ExploreConfig explore, Rng& init_rng);
  FlowActor(int state_dim, int latent_dim, Mlp velocity_net, int flow_steps,
            ExploreConfig explore);

  int state_dim() const { return state_dim_; }
  int latent_dim() const { return latent_dim_; }
  int flow_steps() const { return flow_steps_; }
  const ExploreConfig& explore_config() const { return explore_; }
  ExploreConfig& explore_config() { return explore_; }
  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }

  Vec velocity(std::span<const double> x, double tau,
               std::span<const double> s) const;

  // Mean over draws of |v(x_tau, tau | s) - (x1 - x0)|^2 with the straight
  // line interpolant x_tau = (1 - tau) x0 + tau x1.
  double cfm_loss(std::span<const double> s, std::span<const double> x1,
                  std::span<const CfmSample> draws) const;

  // Adds weight * d(cfm_loss)/d(theta) into param_grad; returns the loss.
  double cfm_loss_grad(std::span<const double> s, std::span<const double> x1,
                       std::span<const CfmSample> draws, double weight,
                       std::span<double> param_grad) const;

  // Integrates the flow from x0 ~ N(0, I) over flow_steps uniform Euler
  // steps. Returns (x1, x0).
  std::pair<Vec, Vec> sample_latent(std::span<const double> s, Rng& rng) const;

  // K short Euler steps along the velocity field plus optional Gaussian
  // perturbation; the temporally correlated exploration applied after
  // sampling.
  Vec explore(Vec x, std::span<const double> s, Rng& rng) const;

  // m frozen (x0, tau) pairs; tau uniform on [0.02, 0.98].
  std::vector<CfmSample> draw_cfm_samples(int m, Rng& rng) const;

 private:
  int state_dim_ = 0;
  int latent_dim_ = 0;
  int flow_steps_ = 1;
  ExploreConfig explore_;
  Mlp net_;

  void fill_input(std::span<const double> s, std::span<const double> x,
                  double tau, Vec& buf) const;
};

// Sum over items of weight * d(cfm_loss)/d(theta), every item evaluated on
// its own frozen draws.
Vec actor_grad_from_ratio(const FlowActor& actor,
                          std::span<const CfmBatchItem> items);

inline constexpr double kCfmTauLo = 0.02;
inline constexpr double kCfmTauHi = 0.98;

}  // namespace fpo
