#pragma once

#include <string>
#include <vector>

#include "buffer.hpp"
#include "envlab.hpp"

namespace fpo {

// Demo datasets, latent dumps and buffer dumps share one carrier: JSON
// lines, first line a header record describing the payload.

struct DemoSet {
  EnvKind env = EnvKind::kPointReach;
  int state_dim = 0;
  int action_dim = 0;
  int chunk_len = 0;
  std::uint64_t config_hash = 0;  // producing run's config identity
  std::vector<DemoEpisode> episodes;

  double success_rate() const;
  std::size_t total_steps() const;
};

void save_demos(const DemoSet& demos, const std::string& path);
DemoSet load_demos(const std::string& path);

struct LatentRecord {
  std::string run_id;   // config hash hex of the producing run
  std::string phase;    // prior | mid | final
  bool success = false;
  Vec x;
};

void save_latents(const std::vector<LatentRecord>& records,
                  const std::string& path);
std::vector<LatentRecord> load_latents(const std::string& path);

// One record per transition, step order inside rollout order.
void dump_buffer(const TrajectoryBuffer& buffer, const std::string& path);

}  // namespace fpo
