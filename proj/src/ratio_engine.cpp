#include "ratio_engine.hpp"

#include <algorithm>
#include <cmath>

namespace fpo {

double loss_drop(double l_old, double l_new) {
  double d = l_old - l_new;
  if (!std::isfinite(d)) fail("loss_drop: non-finite differential");
  return d;
}

RatioBatch standardize_and_map(std::span<const double> deltas, double beta,
                               double sigma_floor, double z_max) {
  if (deltas.empty()) fail_arg("standardize_and_map: empty batch");
  if (!(beta > 0.0)) fail_arg("standardize_and_map: beta must be positive");
  if (!(sigma_floor > 0.0)) fail_arg("standardize_and_map: sigma_floor must be positive");
  RatioBatch out;
  out.delta.assign(deltas.begin(), deltas.end());
  if (!all_finite(out.delta)) fail("standardize_and_map: non-finite delta");
  out.beta = beta;

  const std::size_t n = out.delta.size();
  double mu = 0.0;
  for (double d : out.delta) mu += d;
  mu /= static_cast<double>(n);
  double var = 0.0;
  for (double d : out.delta) var += (d - mu) * (d - mu);
  var /= static_cast<double>(n);
  out.mean = mu;
  out.stddev = std::sqrt(var);
  out.floored = out.stddev < sigma_floor;
  out.sigma_used = std::max(out.stddev, sigma_floor);

  out.z.resize(n);
  out.rho.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double z = out.floored ? 0.0 : (out.delta[i] - mu) / out.stddev;
    z = std::clamp(z, -z_max, z_max);
    out.z[i] = z;
    out.rho[i] = std::exp(beta * z);
  }
  return out;
}

SurrogateResult clipped_surrogate(std::span<const double> rho,
                                  std::span<const double> adv,
                                  double eps_clip) {
  if (rho.size() != adv.size()) fail_arg("clipped_surrogate: size mismatch");
  if (rho.empty()) fail_arg("clipped_surrogate: empty batch");
  if (!(eps_clip > 0.0)) fail_arg("clipped_surrogate: eps_clip must be positive");
  SurrogateResult res;
  const std::size_t n = rho.size();
  res.dloss_drho.assign(n, 0.0);
  const double lo = 1.0 - eps_clip;
  const double hi = 1.0 + eps_clip;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = rho[i];
    const double a = adv[i];
    const double unclipped = r * a;
    const double clipped = std::clamp(r, lo, hi) * a;
    if (unclipped <= clipped) {
      acc += unclipped;
      res.dloss_drho[i] = -a / static_cast<double>(n);
    } else {
      acc += clipped;
      ++res.clipped_count;
    }
  }
  res.loss = -acc / static_cast<double>(n);
  if (!std::isfinite(res.loss)) fail("clipped_surrogate: non-finite loss");
  return res;
}

SurrogateResult surrogate_no_clip(std::span<const double> rho,
                                  std::span<const double> adv) {
  if (rho.size() != adv.size()) fail_arg("surrogate_no_clip: size mismatch");
  if (rho.empty()) fail_arg("surrogate_no_clip: empty batch");
  SurrogateResult res;
  const std::size_t n = rho.size();
  res.dloss_drho.assign(n, 0.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += rho[i] * adv[i];
    res.dloss_drho[i] = -adv[i] / static_cast<double>(n);
  }
  res.loss = -acc / static_cast<double>(n);
  if (!std::isfinite(res.loss)) fail("surrogate_no_clip: non-finite loss");
  return res;
}

StandardizedAdv standardize_advantages(std::span<const double> adv,
                                       double sigma_floor) {
  if (adv.empty()) fail_arg("standardize_advantages: empty batch");
  StandardizedAdv out;
  out.values.assign(adv.begin(), adv.end());
  if (!all_finite(out.values)) fail("standardize_advantages: non-finite advantage");
  if (out.values.size() < 2) {
    out.passthrough = true;
    return out;
  }
  const std::size_t n = out.values.size();
  double mu = 0.0;
  for (double a : out.values) mu += a;
  mu /= static_cast<double>(n);
  double var = 0.0;
  for (double a : out.values) var += (a - mu) * (a - mu);
  var /= static_cast<double>(n);
  const double sd = std::sqrt(var);
  if (sd < sigma_floor) {
    for (double& a : out.values) a = 0.0;
    return out;
  }
  for (double& a : out.values) a = (a - mu) / sd;
  return out;
}

}  // namespace fpo
