#include "mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace fpo {

namespace {

double apply_act(Activation a, double z) {
  switch (a) {
    case Activation::kTanh: return std::tanh(z);
    case Activation::kRelu: return z > 0.0 ? z : 0.0;
    case Activation::kIdentity: return z;
  }
  return z;
}

// Derivative expressed through the post-activation value.
double act_deriv(Activation a, double y) {
  switch (a) {
    case Activation::kTanh: return 1.0 - y * y;
    case Activation::kRelu: return y > 0.0 ? 1.0 : 0.0;
    case Activation::kIdentity: return 1.0;
  }
  return 1.0;
}

}  // namespace

Mlp::Mlp(std::vector<int> layer_sizes, Activation hidden_activation)
    : sizes_(std::move(layer_sizes)), act_(hidden_activation) {
  if (sizes_.size() < 2) fail_arg("Mlp: need at least input and output layer");
  for (int s : sizes_) {
    if (s <= 0) fail_arg("Mlp: layer sizes must be positive");
  }
  init_layout();
}

void Mlp::init_layout() {
  std::size_t total = 0;
  w_off_.clear();
  b_off_.clear();
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const std::size_t n_in = static_cast<std::size_t>(sizes_[l]);
    const std::size_t n_out = static_cast<std::size_t>(sizes_[l + 1]);
    w_off_.push_back(total);
    total += n_in * n_out;
    b_off_.push_back(total);
    total += n_out;
  }
  params_.assign(total, 0.0);
}

Mlp Mlp::random(std::vector<int> layer_sizes, Activation hidden_activation,
                Rng& rng) {
  Mlp net(std::move(layer_sizes), hidden_activation);
  for (std::size_t l = 0; l + 1 < net.sizes_.size(); ++l) {
    const int n_in = net.sizes_[l];
    const int n_out = net.sizes_[l + 1];
    const double bound = std::sqrt(6.0 / (n_in + n_out));
    double* w = net.params_.data() + net.w_off_[l];
    for (int i = 0; i < n_in * n_out; ++i) w[i] = rng.uniform(-bound, bound);
    // biases stay zero
  }
  return net;
}

Vec Mlp::forward(std::span<const double> input) const {
  if (static_cast<int>(input.size()) != input_dim())
    fail_arg("Mlp::forward: input dim " + std::to_string(input.size()) +
             " != " + std::to_string(input_dim()));
  Vec a(input.begin(), input.end());
  Vec next;
  const std::size_t n_layers = sizes_.size() - 1;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const int n_in = sizes_[l];
    const int n_out = sizes_[l + 1];
    const double* w = params_.data() + w_off_[l];
    const double* b = params_.data() + b_off_[l];
    next.assign(static_cast<std::size_t>(n_out), 0.0);
    for (int o = 0; o < n_out; ++o) {
      const double* row = w + static_cast<std::size_t>(o) * n_in;
      double z = b[o];
      for (int i = 0; i < n_in; ++i) z += row[i] * a[i];
      next[o] = (l + 1 < n_layers) ? apply_act(act_, z) : z;
    }
    a.swap(next);
  }
  return a;
}

Vec Mlp::backward(std::span<const double> input,
                  std::span<const double> upstream,
                  std::span<double> param_grad) const {
  if (static_cast<int>(input.size()) != input_dim())
    fail_arg("Mlp::backward: input dim mismatch");
  if (static_cast<int>(upstream.size()) != output_dim())
    fail_arg("Mlp::backward: upstream dim " + std::to_string(upstream.size()) +
             " != output dim " + std::to_string(output_dim()));
  if (param_grad.size() != params_.size())
    fail_arg("Mlp::backward: gradient buffer size mismatch");

  const std::size_t n_layers = sizes_.size() - 1;

  // Forward pass, keeping every post-activation.
  std::vector<Vec> acts(n_layers + 1);
  acts[0].assign(input.begin(), input.end());
  for (std::size_t l = 0; l < n_layers; ++l) {
    const int n_in = sizes_[l];
    const int n_out = sizes_[l + 1];
    const double* w = params_.data() + w_off_[l];
    const double* b = params_.data() + b_off_[l];
    acts[l + 1].assign(static_cast<std::size_t>(n_out), 0.0);
    for (int o = 0; o < n_out; ++o) {
      const double* row = w + static_cast<std::size_t>(o) * n_in;
      double z = b[o];
      for (int i = 0; i < n_in; ++i) z += row[i] * acts[l][i];
      acts[l + 1][o] = (l + 1 < n_layers) ? apply_act(act_, z) : z;
    }
  }

  Vec delta(upstream.begin(), upstream.end());
  Vec prev_delta;
  for (std::size_t l = n_layers; l-- > 0;) {
    const int n_in = sizes_[l];
    const int n_out = sizes_[l + 1];
    const double* w = params_.data() + w_off_[l];
    double* wg = param_grad.data() + w_off_[l];
    double* bg = param_grad.data() + b_off_[l];
    prev_delta.assign(static_cast<std::size_t>(n_in), 0.0);
    for (int o = 0; o < n_out; ++o) {
      const double d = delta[o];
      double* wrow = wg + static_cast<std::size_t>(o) * n_in;
      const double* row = w + static_cast<std::size_t>(o) * n_in;
      for (int i = 0; i < n_in; ++i) {
        wrow[i] += d * acts[l][i];
        prev_delta[i] += row[i] * d;
      }
      bg[o] += d;
    }
    if (l > 0) {
      for (int i = 0; i < n_in; ++i)
        prev_delta[i] *= act_deriv(act_, acts[l][i]);
    }
    delta.swap(prev_delta);
  }
  return delta;
}

Adam::Adam(std::size_t n_params, AdamConfig config)
    : m_(n_params, 0.0), v_(n_params, 0.0), cfg_(config) {}

bool Adam::step(std::span<double> params, std::span<const double> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size())
    fail_arg("Adam::step: size mismatch");
  if (!all_finite(grads)) {
    ++skipped_;
    return false;
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < m_.size(); ++i) {
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grads[i];
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grads[i] * grads[i];
    const double mhat = m_[i] / bc1;
    const double vhat = v_[i] / bc2;
    params[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
  }
  return true;
}

double grad_check(const std::function<double(const Vec&)>& loss,
                  const Vec& analytic_grad, const Vec& params, double fd_step) {
  if (analytic_grad.size() != params.size())
    fail_arg("grad_check: gradient/parameter size mismatch");
  Vec p = params;
  double worst = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double keep = p[i];
    p[i] = keep + fd_step;
    const double up = loss(p);
    p[i] = keep - fd_step;
    const double dn = loss(p);
    p[i] = keep;
    if (!std::isfinite(up) || !std::isfinite(dn))
      return std::numeric_limits<double>::infinity();
    const double cd = (up - dn) / (2.0 * fd_step);
    const double a = analytic_grad[i];
    const double err =
        std::abs(a - cd) / std::max({1.0, std::abs(a), std::abs(cd)});
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace fpo
