#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fpo {

struct EvalPoint {
  std::int64_t env_ticks = 0;
  double success_rate = 0.0;
  double mean_return = 0.0;
  double mean_ep_len = 0.0;
};

// One row per update phase; losses and diagnostics are means over the
// phase's inner steps. Columns that a given algorithm does not produce stay
// empty and serialize as '-'.
struct UpdatePoint {
  std::int64_t env_ticks = 0;
  std::int64_t update_index = 0;
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  std::optional<double> mean_rho;
  std::optional<double> clip_fraction;
  std::optional<double> mean_dloss;
  std::optional<double> policy_entropy;
  double adv_mean = 0.0;
  double adv_std = 0.0;
};

struct RunMetrics {
  std::uint64_t config_hash = 0;
  std::vector<EvalPoint> evals;
  std::vector<UpdatePoint> updates;
};

bool operator==(const EvalPoint& a, const EvalPoint& b);
bool operator==(const UpdatePoint& a, const UpdatePoint& b);
bool operator==(const RunMetrics& a, const RunMetrics& b);

// Tab-separated text, fixed column header, 17-significant-digit decimals
// (lossless for doubles), eval rows before update rows, each group strictly
// increasing in env_ticks. Deterministic byte-for-byte given equal contents.
void write_metrics(const RunMetrics& m, const std::string& path);
RunMetrics read_metrics(const std::string& path);

// Validation shared by writer and trainer: ordering and finiteness.
void check_metrics(const RunMetrics& m);

}  // namespace fpo
