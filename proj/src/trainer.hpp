#pragma once

#include <memory>
#include <string>
#include <vector>

#include "buffer.hpp"
#include "checkpoint.hpp"
#include "config.hpp"
#include "envlab.hpp"
#include "flow_actor.hpp"
#include "gaussian_policy.hpp"
#include "metrics.hpp"
#include "records.hpp"
#include "rng.hpp"
#include "value_ensemble.hpp"

namespace fpo {

struct EvalStats {
  double success_rate = 0.0;
  double mean_return = 0.0;
  double mean_ep_len = 0.0;
};

// Orchestrates the whole run: behavior-cloning pretraining, alternating
// rollout and update phases against a frozen policy snapshot, periodic
// deterministic evaluation, metrics and checkpointing. One instance per run.
class Trainer {
 public:
  explicit Trainer(const TrainerConfig& cfg);

  const TrainerConfig& config() const { return cfg_; }

  // Scripted suboptimal demos under the config's bias/noise settings.
  static DemoSet generate_demos(const TrainerConfig& cfg);

  // Trains the decoder net (when not identity), freezes it, then behavior
  // clones the policy on the demo latents. Establishes the prior snapshot.
  void pretrain_bc(const DemoSet& demos);
  void pretrain_bc(const DemoSet& demos, int epochs);

  // Exactly cfg.t_rollout policy steps across the parallel envs, behavior
  // driven by the frozen snapshot; one rollout per env pushed to the buffer.
  void rollout_phase();

  // cfg.k_update inner steps (critics first, then the actor), then snapshot
  // sync. Advantages are recomputed once at phase entry.
  void update_phase();

  // Full run: prior eval, rollout/update alternation to the tick budget,
  // periodic and final deterministic evals. Dispatches on cfg.algo.
  RunMetrics train();

  // Deterministic evaluation (exploration off) on a separate env and RNG
  // stream; never touches the buffer, parameters, or training streams.
  EvalStats evaluate(int episodes);

  // One latent record per policy step over `episodes` eval episodes.
  std::vector<LatentRecord> collect_latents(int episodes,
                                            const std::string& phase_tag);

  Checkpoint make_checkpoint() const;
  void restore(const Checkpoint& ckpt);
  // Restores only the policy-side prior (actor, decoder, Gaussian head);
  // critics and optimizers stay fresh. Lets many runs share one prior.
  void load_prior(const Checkpoint& ckpt);

  void sync_snapshot();
  // cfm_loss_old - cfm_loss(theta) per buffered transition, buffer order.
  Vec buffer_loss_drops();

  FlowActor& actor() { return *actor_; }
  FlowActor& actor_snapshot() { return *actor_old_; }
  GaussianPolicy& gaussian() { return *gauss_; }
  ValueEnsemble& critics() { return *critics_; }
  TrajectoryBuffer& buffer() { return buffer_; }
  BaseDecoder& decoder() { return decoder_; }
  const RunMetrics& metrics() const { return metrics_; }
  std::int64_t env_ticks() const { return env_ticks_; }
  int phase_index() const { return phase_index_; }
  bool pretrained() const { return pretrained_; }

 private:
  struct EnvSlot {
    std::unique_ptr<Env> env;
    Rng rng;
    bool needs_reset = true;
    std::vector<Transition> pending;
  };

  void build_networks();
  Vec rollout_latent(const Vec& s, Rng& rng, std::vector<CfmSample>* draws_out,
                     double* l_init_out, double* logp_out);
  Vec eval_latent(const Vec& s, Rng& rng) const;
  void collect_policy_step(EnvSlot& slot);
  void compute_phase_advantages();
  void critic_inner_step(const std::vector<Transition*>& batch,
                         double* critic_loss_out);
  void actor_inner_step_fpo(const std::vector<Transition*>& batch,
                            UpdatePoint& stats, int n_steps);
  void actor_inner_step_rwfm(const std::vector<Transition*>& batch,
                             UpdatePoint& stats, int n_steps);
  void actor_inner_step_gppo(const std::vector<Transition*>& batch,
                             UpdatePoint& stats, int n_steps);
  void maybe_eval(bool force);

  TrainerConfig cfg_;
  Rng master_;
  Rng policy_rng_;
  Rng update_rng_;
  Rng eval_base_;
  int eval_count_ = 0;

  std::vector<EnvSlot> slots_;
  std::unique_ptr<FlowActor> actor_;
  std::unique_ptr<FlowActor> actor_old_;
  std::unique_ptr<GaussianPolicy> gauss_;
  std::unique_ptr<GaussianPolicy> gauss_old_;
  std::unique_ptr<ValueEnsemble> critics_;
  BaseDecoder decoder_;
  TrajectoryBuffer buffer_;

  std::unique_ptr<Adam> actor_opt_;
  std::unique_ptr<Adam> gauss_opt_;
  std::vector<Adam> critic_opts_;

  std::int64_t env_ticks_ = 0;
  std::int64_t policy_steps_ = 0;
  std::int64_t last_eval_ticks_ = -1;
  int phase_index_ = 0;
  bool pretrained_ = false;
  RunMetrics metrics_;
};

struct AblationRow {
  std::string variant;
  std::vector<double> final_success;  // per seed, NaN where the run failed
  std::vector<std::string> errors;    // per seed, empty when ok
  double median_success = 0.0;
};

struct AblationTable {
  std::vector<std::uint64_t> seeds;
  std::vector<AblationRow> rows;  // ranked by median, best first
};

// Runs {full, no_ratio, no_clip, k1_explore, single_critic} over the given
// seeds with identical budgets and a shared prior built from cfg.seed. Env
// streams depend only on the seed, so variants see identical resets. A
// failed run marks its cell and the suite continues.
AblationTable run_ablation_suite(const TrainerConfig& cfg,
                                 const std::vector<std::uint64_t>& seeds);

std::string format_ablation_table(const AblationTable& t);

double median(std::vector<double> xs);

}  // namespace fpo
