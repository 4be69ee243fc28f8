#pragma once

#include <cstddef>
#include <span>

#include "common.hpp"

namespace fpo {

inline constexpr double kSigmaFloor = 1e-8;
inline constexpr double kZMax = 5.0;

// Per-minibatch loss differentials standardized and mapped to likelihood-free
// ratio proxies rho = exp(beta * z). Batch statistics use the population
// standard deviation and are treated as constants by the gradient path;
// sigma_used is the denominator the chain rule must divide by.
struct RatioBatch {
  Vec delta;          // loss drops, as given
  double mean = 0.0;  // mu over the minibatch
  double stddev = 0.0;
  double sigma_used = kSigmaFloor;  // max(stddev, sigma_floor)
  bool floored = false;             // stddev below floor: z = 0, rho = 1
  double beta = 1.0;
  Vec z;
  Vec rho;  // exp(beta * clamp(z, -z_max, z_max))
};

// l_old - l_new: positive when the new parameters fit the stored sample
// better.
double loss_drop(double l_old, double l_new);

RatioBatch standardize_and_map(std::span<const double> deltas, double beta,
                               double sigma_floor = kSigmaFloor,
                               double z_max = kZMax);

struct SurrogateResult {
  double loss = 0.0;
  Vec dloss_drho;             // per element; 0 where the clipped branch wins
  std::size_t clipped_count = 0;  // elements where the clipped branch is
                                  // strictly active
};

// loss = -mean(min(rho*A, clip(rho, 1-eps, 1+eps)*A)). Ties at the clip
// boundary resolve to the unclipped branch so gradients keep flowing there.
SurrogateResult clipped_surrogate(std::span<const double> rho,
                                  std::span<const double> adv,
                                  double eps_clip);

// loss = -mean(rho*A); the no-clipping ablation path.
SurrogateResult surrogate_no_clip(std::span<const double> rho,
                                  std::span<const double> adv);

struct StandardizedAdv {
  Vec values;
  bool passthrough = false;  // batch < 2: returned unchanged, warn upstream
};

// Zero mean, unit population std; constant batches map to all zeros.
StandardizedAdv standardize_advantages(std::span<const double> adv,
                                       double sigma_floor = kSigmaFloor);

}  // namespace fpo
