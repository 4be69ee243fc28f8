#pragma once

#include <functional>
#include <span>
#include <vector>

#include "common.hpp"
#include "rng.hpp"

namespace fpo {

enum class Activation { kTanh, kRelu, kIdentity };

// Dense feed-forward net with all parameters held in one flat vector.
// Hidden layers use the configured activation; the output layer is linear.
// Per-layer layout inside params(): weight matrix (out x in, row-major)
// followed by the bias vector.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<int> layer_sizes, Activation hidden_activation);

  // Uniform init in +-sqrt(6 / (fan_in + fan_out)), biases zero.
  static Mlp random(std::vector<int> layer_sizes, Activation hidden_activation,
                    Rng& rng);

  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  const std::vector<int>& layer_sizes() const { return sizes_; }
  Activation activation() const { return act_; }
  std::size_t param_count() const { return params_.size(); }
  Vec& params() { return params_; }
  const Vec& params() const { return params_; }

  Vec forward(std::span<const double> input) const;

  // Gradient of <upstream, forward(input)> with respect to every parameter,
  // accumulated into param_grad (same length as params()). Returns the
  // gradient with respect to the input. Parameters are not touched.
  Vec backward(std::span<const double> input, std::span<const double> upstream,
               std::span<double> param_grad) const;

 private:
  std::vector<int> sizes_;
  Activation act_ = Activation::kTanh;
  Vec params_;
  std::vector<std::size_t> w_off_, b_off_;

  void init_layout();
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam over a flat parameter vector.
class Adam {
 public:
  Adam() = default;
  Adam(std::size_t n_params, AdamConfig config);

  // Applies one update in place. Non-finite gradients leave the parameters
  // and accumulators untouched and return false.
  bool step(std::span<double> params, std::span<const double> grads);

  long step_count() const { return t_; }
  long skipped_count() const { return skipped_; }
  const AdamConfig& config() const { return cfg_; }
  void set_lr(double lr) { cfg_.lr = lr; }

 private:
  Vec m_, v_;
  long t_ = 0;
  long skipped_ = 0;
  AdamConfig cfg_;
};

// Max over parameters of |analytic - central difference| scaled by
// max(1, |analytic|, |cd|). A non-finite loss evaluation reports as +inf.
double grad_check(const std::function<double(const Vec&)>& loss,
                  const Vec& analytic_grad, const Vec& params, double fd_step);

}  // namespace fpo
