#include "trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ratio_engine.hpp"

namespace fpo {

namespace {

constexpr std::uint64_t kTagActor = 0xA1;
constexpr std::uint64_t kTagGauss = 0xA2;
constexpr std::uint64_t kTagCritic = 0xA3;
constexpr std::uint64_t kTagDecoder = 0xA4;
constexpr std::uint64_t kTagDemos = 0xA5;
constexpr std::uint64_t kTagBc = 0xA6;
constexpr std::uint64_t kTagPolicy = 0xA7;
constexpr std::uint64_t kTagUpdate = 0xA8;
constexpr std::uint64_t kTagEval = 0xA9;
constexpr std::uint64_t kTagEnvBase = 0x2000;

std::vector<int> with_io(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> layers;
  layers.push_back(in);
  for (int h : hidden) layers.push_back(h);
  layers.push_back(out);
  return layers;
}

void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
  for (std::size_t i = 0; i + 1 < idx.size(); ++i) {
    const std::size_t j = i + rng.uniform_index(idx.size() - i);
    std::swap(idx[i], idx[j]);
  }
}

void set_params_checked(Mlp& net, const Vec& p, const std::string& what) {
  if (net.params().size() != p.size())
    fail("checkpoint: " + what + " parameter count mismatch");
  net.params() = p;
}

void check_layers(const Mlp& net, const std::vector<int>& expect,
                  const std::string& what) {
  if (net.layer_sizes() != expect)
    fail("checkpoint: " + what + " layer sizes incompatible with config");
}

struct InnerAcc {
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double mean_rho = 0.0;
  double clip_fraction = 0.0;
  double mean_dloss = 0.0;
  double entropy = 0.0;
  double adv_mean = 0.0;
  double adv_std = 0.0;
};

double mean_of(std::span<const double> xs) {
  double acc = 0.0;
  for (double x : xs) acc += x;
  return acc / static_cast<double>(xs.size());
}

void adv_stats(std::span<const double> advs, InnerAcc& acc, int n_steps) {
  const double mu = mean_of(advs);
  double var = 0.0;
  for (double a : advs) var += (a - mu) * (a - mu);
  var /= static_cast<double>(advs.size());
  acc.adv_mean += mu / n_steps;
  acc.adv_std += std::sqrt(var) / n_steps;
}

}  // namespace

double median(std::vector<double> xs) {
  if (xs.empty()) fail_arg("median: empty input");
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

Trainer::Trainer(const TrainerConfig& cfg)
    : cfg_(cfg),
      master_(cfg.seed),
      policy_rng_(master_.fork(kTagPolicy)),
      update_rng_(master_.fork(kTagUpdate)),
      eval_base_(master_.fork(kTagEval)),
      decoder_(BaseDecoder::identity(cfg.state_dim(), cfg.action_dim(),
                                     cfg.chunk_len)),
      buffer_(cfg.buffer_window) {
  validate_config(cfg_);
  for (int i = 0; i < cfg_.num_envs; ++i) {
    EnvSlot slot{make_env(cfg_.env, cfg_.chunk_len, cfg_.max_episode_ticks,
                          cfg_.goal_tol, cfg_.reward_mode),
                 master_.fork(kTagEnvBase + static_cast<std::uint64_t>(i)),
                 true,
                 {}};
    slots_.push_back(std::move(slot));
  }
  build_networks();
}

void Trainer::build_networks() {
  const int d = cfg_.state_dim();
  const int latent = cfg_.latent_dim();
  ExploreConfig ex;
  ex.steps = cfg_.effective_explore_k();
  ex.step_size = cfg_.explore_eta;
  ex.noise = cfg_.explore_noise;
  ex.flow_time = cfg_.explore_tau;

  Rng actor_rng = master_.fork(kTagActor);
  actor_ = std::make_unique<FlowActor>(d, latent, cfg_.actor_hidden,
                                       cfg_.flow_steps, ex, actor_rng);
  actor_old_ = std::make_unique<FlowActor>(*actor_);

  Rng gauss_rng = master_.fork(kTagGauss);
  gauss_ = std::make_unique<GaussianPolicy>(d, latent, cfg_.actor_hidden,
                                            cfg_.gppo_init_sigma, gauss_rng);
  gauss_old_ = std::make_unique<GaussianPolicy>(*gauss_);

  Rng critic_rng = master_.fork(kTagCritic);
  critics_ = std::make_unique<ValueEnsemble>(
      d, latent, cfg_.critic_hidden, cfg_.effective_ensemble_m(), cfg_.gamma,
      cfg_.gae_lambda, cfg_.polyak_tau, critic_rng);

  if (!cfg_.decoder_identity) {
    Rng dec_rng = master_.fork(kTagDecoder);
    Mlp net = Mlp::random(with_io(d + latent, cfg_.decoder_hidden, latent),
                          Activation::kTanh, dec_rng);
    decoder_ = BaseDecoder::network(std::move(net), d, cfg_.action_dim(),
                                    cfg_.chunk_len);
  }

  actor_opt_ = std::make_unique<Adam>(actor_->net().param_count(),
                                      AdamConfig{cfg_.actor_lr});
  gauss_opt_ =
      std::make_unique<Adam>(gauss_->param_count(), AdamConfig{cfg_.actor_lr});
  critic_opts_.clear();
  for (int i = 0; i < critics_->members(); ++i)
    critic_opts_.emplace_back(critics_->online(i).param_count(),
                              AdamConfig{cfg_.critic_lr});
}

DemoSet Trainer::generate_demos(const TrainerConfig& cfg) {
  validate_config(cfg);
  auto env = make_env(cfg.env, cfg.chunk_len, cfg.max_episode_ticks,
                      cfg.goal_tol, cfg.reward_mode);
  Rng rng = Rng(cfg.seed).fork(kTagDemos);
  DemoSet demos;
  demos.env = cfg.env;
  demos.state_dim = cfg.state_dim();
  demos.action_dim = cfg.action_dim();
  demos.chunk_len = cfg.chunk_len;
  demos.config_hash = config_hash(cfg);
  for (int ep = 0; ep < cfg.demo_episodes; ++ep) {
    demos.episodes.push_back(scripted_demo(*env, DemoQuality::kSuboptimal, rng,
                                           cfg.demo_angle_bias,
                                           cfg.demo_noise));
  }
  return demos;
}

void Trainer::pretrain_bc(const DemoSet& demos) {
  pretrain_bc(demos, cfg_.bc_epochs);
}

void Trainer::pretrain_bc(const DemoSet& demos, int epochs) {
  if (demos.episodes.empty() || demos.total_steps() == 0)
    fail_arg("pretrain_bc: empty demo set");
  if (demos.state_dim != cfg_.state_dim() ||
      demos.action_dim != cfg_.action_dim() ||
      demos.chunk_len != cfg_.chunk_len)
    fail_arg("pretrain_bc: demo dimensions do not match config");

  std::vector<const DemoStep*> data;
  for (const auto& ep : demos.episodes)
    for (const auto& st : ep.steps) data.push_back(&st);
  const std::size_t n = data.size();
  Rng bc_rng = master_.fork(kTagBc);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batch_n =
      std::min<std::size_t>(static_cast<std::size_t>(cfg_.bc_batch), n);

  if (!decoder_.frozen()) {
    // The decoder learns to invert the chunk lift, conditioned on state,
    // before it is frozen for good.
    Mlp& net = decoder_.net_mutable();
    Adam opt(net.param_count(), AdamConfig{cfg_.bc_lr});
    Vec grad(net.param_count());
    const int out_dim = net.output_dim();
    for (int epoch = 0; epoch < cfg_.decoder_epochs; ++epoch) {
      shuffle_indices(order, bc_rng);
      for (std::size_t at = 0; at + batch_n <= n; at += batch_n) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double loss = 0.0;
        Vec in;
        Vec upstream(static_cast<std::size_t>(out_dim));
        for (std::size_t b = 0; b < batch_n; ++b) {
          const DemoStep& st = *data[order[at + b]];
          in.assign(st.s.begin(), st.s.end());
          in.insert(in.end(), st.chunk.begin(), st.chunk.end());
          const Vec out = net.forward(in);
          for (int j = 0; j < out_dim; ++j) {
            const double err = out[static_cast<std::size_t>(j)] -
                               st.chunk[static_cast<std::size_t>(j)];
            loss += err * err;
            upstream[static_cast<std::size_t>(j)] =
                2.0 * err / static_cast<double>(batch_n * out_dim);
          }
          net.backward(in, upstream, grad);
        }
        loss /= static_cast<double>(batch_n * out_dim);
        if (!std::isfinite(loss))
          fail("pretrain_bc: non-finite decoder loss at epoch " +
               std::to_string(epoch));
        clip_global_norm(grad, cfg_.max_grad_norm);
        opt.step(net.params(), grad);
      }
    }
    decoder_.freeze();
  }
  decoder_.check_frozen();

  if (cfg_.algo == Algo::kGppo) {
    Mlp& net = gauss_->mean_net_mutable();
    Adam opt(gauss_->param_count(), AdamConfig{cfg_.bc_lr});
    Vec grad(gauss_->param_count());
    Vec params(gauss_->param_count());
    const std::size_t net_n = net.params().size();
    const int out_dim = net.output_dim();
    for (int epoch = 0; epoch < epochs; ++epoch) {
      shuffle_indices(order, bc_rng);
      for (std::size_t at = 0; at + batch_n <= n; at += batch_n) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double loss = 0.0;
        Vec upstream(static_cast<std::size_t>(out_dim));
        for (std::size_t b = 0; b < batch_n; ++b) {
          const DemoStep& st = *data[order[at + b]];
          const Vec mu = net.forward(st.s);
          for (int j = 0; j < out_dim; ++j) {
            const double err = mu[static_cast<std::size_t>(j)] -
                               st.chunk[static_cast<std::size_t>(j)];
            loss += err * err;
            upstream[static_cast<std::size_t>(j)] =
                2.0 * err / static_cast<double>(batch_n * out_dim);
          }
          net.backward(st.s, upstream,
                       std::span<double>(grad).subspan(0, net_n));
        }
        loss /= static_cast<double>(batch_n * out_dim);
        if (!std::isfinite(loss))
          fail("pretrain_bc: non-finite regression loss at epoch " +
               std::to_string(epoch));
        clip_global_norm(grad, cfg_.max_grad_norm);
        gauss_->get_params(params);
        opt.step(params, grad);
        gauss_->set_params(params);
      }
    }
  } else {
    Mlp& net = actor_->net();
    Adam opt(net.param_count(), AdamConfig{cfg_.bc_lr});
    Vec grad(net.param_count());
    for (int epoch = 0; epoch < epochs; ++epoch) {
      shuffle_indices(order, bc_rng);
      for (std::size_t at = 0; at + batch_n <= n; at += batch_n) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double loss = 0.0;
        for (std::size_t b = 0; b < batch_n; ++b) {
          const DemoStep& st = *data[order[at + b]];
          const auto draws = actor_->draw_cfm_samples(cfg_.m_draws, bc_rng);
          loss += actor_->cfm_loss_grad(st.s, st.chunk, draws,
                                        1.0 / static_cast<double>(batch_n),
                                        grad);
        }
        loss /= static_cast<double>(batch_n);
        if (!std::isfinite(loss))
          fail("pretrain_bc: non-finite flow-matching loss at epoch " +
               std::to_string(epoch));
        clip_global_norm(grad, cfg_.max_grad_norm);
        opt.step(net.params(), grad);
      }
    }
  }
  sync_snapshot();
  pretrained_ = true;
}

void Trainer::sync_snapshot() {
  *actor_old_ = *actor_;
  *gauss_old_ = *gauss_;
  if (cfg_.algo == Algo::kFpo) {
    for (auto& rollout : buffer_.rollouts_mutable())
      for (auto& t : rollout)
        t.cfm_loss_old = actor_->cfm_loss(t.s, t.x, t.draws);
  } else if (cfg_.algo == Algo::kGppo) {
    for (auto& rollout : buffer_.rollouts_mutable())
      for (auto& t : rollout) t.logp_old = gauss_->log_prob(t.s, t.x);
  }
}

Vec Trainer::buffer_loss_drops() {
  Vec out;
  out.reserve(buffer_.size());
  for (const auto& rollout : buffer_.rollouts())
    for (const auto& t : rollout)
      out.push_back(loss_drop(t.cfm_loss_old,
                              actor_->cfm_loss(t.s, t.x, t.draws)));
  return out;
}

Vec Trainer::rollout_latent(const Vec& s, Rng& rng,
                            std::vector<CfmSample>* draws_out,
                            double* l_init_out, double* logp_out) {
  if (cfg_.algo == Algo::kGppo) {
    Vec x = gauss_old_->sample(s, rng);
    *logp_out = gauss_old_->log_prob(s, x);
    *l_init_out = 0.0;
    return x;
  }
  auto [x1, x0] = actor_old_->sample_latent(s, rng);
  Vec x = cfg_.effective_explore_k() > 0 ? actor_old_->explore(x1, s, rng)
                                         : std::move(x1);
  *draws_out = actor_old_->draw_cfm_samples(cfg_.m_draws, rng);
  *l_init_out = actor_old_->cfm_loss(s, x, *draws_out);
  *logp_out = 0.0;
  return x;
}

Vec Trainer::eval_latent(const Vec& s, Rng& rng) const {
  if (cfg_.algo == Algo::kGppo) return gauss_->mean(s);
  return actor_->sample_latent(s, rng).first;
}

void Trainer::collect_policy_step(EnvSlot& slot) {
  Env& env = *slot.env;
  if (slot.needs_reset) {
    env.reset(slot.rng);
    slot.needs_reset = false;
  }
  Transition t;
  t.s = env.state();
  std::vector<CfmSample> draws;
  double l_init = 0.0;
  double logp = 0.0;
  t.x = rollout_latent(t.s, policy_rng_, &draws, &l_init, &logp);
  t.draws = std::move(draws);
  t.cfm_loss_init = l_init;
  t.cfm_loss_old = l_init;
  t.logp_old = logp;
  const Vec chunk = decoder_.decode_flat(t.s, t.x);
  t.a = chunk;

  const int da = env.action_dim();
  double r_sum = 0.0;
  bool done = false;
  bool truncated = false;
  Vec s_next = t.s;
  for (int k = 0; k < cfg_.chunk_len; ++k) {
    const std::span<const double> a(chunk.data() +
                                        static_cast<std::size_t>(k) * da,
                                    static_cast<std::size_t>(da));
    StepResult res = env.step(a);
    r_sum += res.r;
    s_next = std::move(res.s_next);
    done = res.done;
    truncated = res.truncated;
    if (done || truncated) break;
  }
  // Budget is charged per policy step: a chunk cut short by termination
  // still consumes its full H ticks, so env_ticks == policy_steps * H holds
  // exactly.
  env_ticks_ += cfg_.chunk_len;
  t.r = r_sum;
  t.s_next = std::move(s_next);
  t.done = done;
  t.truncated = truncated;
  t.step_index = static_cast<int>(slot.pending.size());
  slot.pending.push_back(std::move(t));
  ++policy_steps_;
  if (done || truncated) slot.needs_reset = true;
}

void Trainer::rollout_phase() {
  if (cfg_.t_rollout == 0) return;
  if (!decoder_.frozen()) decoder_.freeze();
  decoder_.check_frozen();
  for (int step = 0; step < cfg_.t_rollout; ++step) {
    EnvSlot& slot = slots_[static_cast<std::size_t>(step) % slots_.size()];
    collect_policy_step(slot);
  }
  for (auto& slot : slots_) {
    if (!slot.pending.empty()) buffer_.push_rollout(std::move(slot.pending));
    slot.pending.clear();
  }
}

void Trainer::compute_phase_advantages() {
  for (auto& rollout : buffer_.rollouts_mutable()) {
    std::size_t start = 0;
    while (start < rollout.size()) {
      std::size_t boundary = start;
      while (boundary < rollout.size() &&
             !(rollout[boundary].done || rollout[boundary].truncated))
        ++boundary;
      const std::size_t chunk_end =
          boundary < rollout.size() ? boundary + 1 : boundary;
      const std::size_t len = chunk_end - start;
      Vec rewards(len);
      Vec values(len + 1);
      std::vector<unsigned char> dones(len);
      for (std::size_t i = 0; i < len; ++i) {
        auto& t = rollout[start + i];
        rewards[i] = t.r;
        dones[i] = t.done ? 1 : 0;
        values[i] = critics_->value_baseline(t.s, t.x);
        t.value = values[i];
      }
      const auto& last = rollout[chunk_end - 1];
      if (last.done) {
        values[len] = 0.0;
      } else if (cfg_.algo == Algo::kGppo) {
        const Vec xn = gauss_->sample(last.s_next, update_rng_);
        values[len] = critics_->value_baseline(last.s_next, xn);
      } else {
        values[len] =
            critics_->value_baseline(last.s_next, *actor_, update_rng_);
      }
      const Vec adv = gae(rewards, values, dones, cfg_.gamma, cfg_.gae_lambda);
      for (std::size_t i = 0; i < len; ++i) rollout[start + i].adv = adv[i];
      start = chunk_end;
    }
  }
}

void Trainer::critic_inner_step(const std::vector<Transition*>& batch,
                                double* critic_loss_out) {
  const std::size_t n = batch.size();
  std::vector<double> targets(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Transition& t = *batch[i];
    if (t.done) {
      targets[i] = t.r;
    } else if (cfg_.algo == Algo::kGppo) {
      const Vec xn = gauss_->sample(t.s_next, update_rng_);
      targets[i] = critics_->td_target_with_latent(t.r, t.s_next, false, xn);
    } else {
      targets[i] = critics_->td_target(t.r, t.s_next, false, *actor_,
                                       update_rng_);
    }
  }
  std::vector<CriticBatchItem> items(n);
  for (std::size_t i = 0; i < n; ++i)
    items[i] = CriticBatchItem{batch[i]->s, batch[i]->x, targets[i]};
  std::vector<Vec> grads(static_cast<std::size_t>(critics_->members()));
  for (int i = 0; i < critics_->members(); ++i)
    grads[static_cast<std::size_t>(i)]
        .assign(critics_->online(i).param_count(), 0.0);
  *critic_loss_out = critics_->critic_loss(items, grads);
  for (int i = 0; i < critics_->members(); ++i) {
    auto& g = grads[static_cast<std::size_t>(i)];
    clip_global_norm(g, cfg_.max_grad_norm);
    critic_opts_[static_cast<std::size_t>(i)].step(
        critics_->online(i).params(), g);
  }
  critics_->polyak_update();
}

void Trainer::actor_inner_step_fpo(const std::vector<Transition*>& batch,
                                   UpdatePoint& stats, int n_steps) {
  const std::size_t n = batch.size();
  Vec deltas(n);
  Vec advs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Transition& t = *batch[i];
    const double l_new = actor_->cfm_loss(t.s, t.x, t.draws);
    deltas[i] = loss_drop(t.cfm_loss_old, l_new);
    advs[i] = t.adv;
  }
  RatioBatch rb;
  if (cfg_.no_ratio) {
    // Ratio disabled: rho pinned to 1 and treated as a constant, so no
    // gradient reaches the actor through the surrogate.
    rb.delta = deltas;
    rb.z.assign(n, 0.0);
    rb.rho.assign(n, 1.0);
    rb.sigma_used = cfg_.sigma_floor;
    rb.beta = cfg_.beta;
  } else {
    rb = standardize_and_map(deltas, cfg_.beta, cfg_.sigma_floor, cfg_.z_max);
  }
  const StandardizedAdv sa = standardize_advantages(advs, cfg_.sigma_floor);
  const SurrogateResult sur =
      cfg_.no_clip ? surrogate_no_clip(rb.rho, sa.values)
                   : clipped_surrogate(rb.rho, sa.values, cfg_.clip_eps);

  if (!cfg_.no_ratio) {
    std::vector<CfmBatchItem> items;
    items.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Transition& t = *batch[i];
      const double w = sur.dloss_drho[i] * rb.rho[i] * cfg_.beta *
                       (-1.0 / rb.sigma_used);
      if (w == 0.0) continue;
      items.push_back(CfmBatchItem{t.s, t.x, t.draws, w});
    }
    Vec grad(actor_->net().param_count(), 0.0);
    if (!items.empty()) grad = actor_grad_from_ratio(*actor_, items);
    clip_global_norm(grad, cfg_.max_grad_norm);
    actor_opt_->step(actor_->net().params(), grad);
  }

  InnerAcc tmp;
  adv_stats(advs, tmp, 1);
  stats.actor_loss += sur.loss / n_steps;
  *stats.mean_rho += mean_of(rb.rho) / n_steps;
  *stats.clip_fraction +=
      static_cast<double>(sur.clipped_count) / static_cast<double>(n) / n_steps;
  *stats.mean_dloss += mean_of(deltas) / n_steps;
  stats.adv_mean += tmp.adv_mean / n_steps;
  stats.adv_std += tmp.adv_std / n_steps;
}

void Trainer::actor_inner_step_rwfm(const std::vector<Transition*>& batch,
                                    UpdatePoint& stats, int n_steps) {
  const std::size_t n = batch.size();
  Vec advs(n);
  for (std::size_t i = 0; i < n; ++i) advs[i] = batch[i]->adv;
  const StandardizedAdv sa = standardize_advantages(advs, cfg_.sigma_floor);
  Vec w(n);
  double wsum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = std::exp(sa.values[i] / cfg_.rwfm_temperature);
    wsum += w[i];
  }
  const double wmean = wsum / static_cast<double>(n);
  for (double& v : w) v /= wmean;

  Vec grad(actor_->net().param_count(), 0.0);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Transition& t = *batch[i];
    const auto draws = actor_->draw_cfm_samples(cfg_.m_draws, update_rng_);
    const double wi = w[i] / static_cast<double>(n);
    loss += wi * actor_->cfm_loss_grad(t.s, t.x, draws, wi, grad);
  }
  if (!std::isfinite(loss)) fail("rwfm: non-finite weighted loss");
  clip_global_norm(grad, cfg_.max_grad_norm);
  actor_opt_->step(actor_->net().params(), grad);

  InnerAcc tmp;
  adv_stats(advs, tmp, 1);
  stats.actor_loss += loss / n_steps;
  stats.adv_mean += tmp.adv_mean / n_steps;
  stats.adv_std += tmp.adv_std / n_steps;
}

void Trainer::actor_inner_step_gppo(const std::vector<Transition*>& batch,
                                    UpdatePoint& stats, int n_steps) {
  const std::size_t n = batch.size();
  Vec ratios(n);
  Vec advs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Transition& t = *batch[i];
    const double logp = gauss_->log_prob(t.s, t.x);
    ratios[i] = std::exp(logp - t.logp_old);
    if (!std::isfinite(ratios[i])) fail("gppo: non-finite ratio");
    advs[i] = t.adv;
  }
  const StandardizedAdv sa = standardize_advantages(advs, cfg_.sigma_floor);
  const SurrogateResult sur =
      cfg_.no_clip ? surrogate_no_clip(ratios, sa.values)
                   : clipped_surrogate(ratios, sa.values, cfg_.clip_eps);

  Vec grad(gauss_->param_count(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double wl = sur.dloss_drho[i] * ratios[i];
    if (wl == 0.0) continue;
    gauss_->log_prob_grad(batch[i]->s, batch[i]->x, wl, grad);
  }
  clip_global_norm(grad, cfg_.max_grad_norm);
  Vec params(gauss_->param_count());
  gauss_->get_params(params);
  gauss_opt_->step(params, grad);
  gauss_->set_params(params);
  gauss_->clamp_log_std(-5.0, 2.0);

  InnerAcc tmp;
  adv_stats(advs, tmp, 1);
  stats.actor_loss += sur.loss / n_steps;
  *stats.mean_rho += mean_of(ratios) / n_steps;
  *stats.clip_fraction +=
      static_cast<double>(sur.clipped_count) / static_cast<double>(n) / n_steps;
  *stats.policy_entropy += gauss_->entropy() / n_steps;
  stats.adv_mean += tmp.adv_mean / n_steps;
  stats.adv_std += tmp.adv_std / n_steps;
}

void Trainer::update_phase() {
  if (decoder_.frozen()) decoder_.check_frozen();
  if (cfg_.k_update > 0) {
    if (buffer_.empty()) fail("update_phase: empty buffer");
    compute_phase_advantages();
    UpdatePoint u;
    u.env_ticks = env_ticks_;
    u.update_index = phase_index_ + 1;
    u.mean_rho = 0.0;
    u.clip_fraction = 0.0;
    u.mean_dloss = 0.0;
    u.policy_entropy = 0.0;
    for (int k = 0; k < cfg_.k_update; ++k) {
      const auto batch = buffer_.sample_batch(
          static_cast<std::size_t>(cfg_.batch_size), update_rng_);
      double closs = 0.0;
      critic_inner_step(batch, &closs);
      u.critic_loss += closs / cfg_.k_update;
      switch (cfg_.algo) {
        case Algo::kFpo:
          actor_inner_step_fpo(batch, u, cfg_.k_update);
          break;
        case Algo::kRwfm:
          actor_inner_step_rwfm(batch, u, cfg_.k_update);
          break;
        case Algo::kGppo:
          actor_inner_step_gppo(batch, u, cfg_.k_update);
          break;
      }
    }
    switch (cfg_.algo) {
      case Algo::kFpo:
        u.policy_entropy.reset();
        break;
      case Algo::kRwfm:
        u.mean_rho.reset();
        u.clip_fraction.reset();
        u.mean_dloss.reset();
        u.policy_entropy.reset();
        break;
      case Algo::kGppo:
        u.mean_dloss.reset();
        break;
    }
    if (metrics_.updates.empty() ||
        metrics_.updates.back().env_ticks < u.env_ticks)
      metrics_.updates.push_back(u);
  }
  sync_snapshot();
  ++phase_index_;
}

void Trainer::maybe_eval(bool force) {
  if (env_ticks_ <= last_eval_ticks_) return;
  if (!force && env_ticks_ - last_eval_ticks_ < cfg_.eval_interval) return;
  const EvalStats es = evaluate(cfg_.eval_episodes);
  metrics_.evals.push_back(EvalPoint{env_ticks_, es.success_rate,
                                     es.mean_return, es.mean_ep_len});
  last_eval_ticks_ = env_ticks_;
}

RunMetrics Trainer::train() {
  metrics_ = RunMetrics{};
  metrics_.config_hash = config_hash(cfg_);
  env_ticks_ = 0;
  policy_steps_ = 0;
  phase_index_ = 0;
  last_eval_ticks_ = -1;
  buffer_.clear();
  if (!pretrained_) {
    const DemoSet demos = generate_demos(cfg_);
    pretrain_bc(demos);
  }
  if (cfg_.total_ticks > 0 && cfg_.t_rollout == 0)
    fail_arg("train: t_rollout must be positive when total_ticks > 0");
  maybe_eval(true);
  while (env_ticks_ < cfg_.total_ticks) {
    rollout_phase();
    update_phase();
    maybe_eval(false);
  }
  maybe_eval(true);
  check_metrics(metrics_);
  return metrics_;
}

EvalStats Trainer::evaluate(int episodes) {
  if (episodes < 1) fail_arg("evaluate: episodes must be >= 1");
  Rng rng = eval_base_.fork(static_cast<std::uint64_t>(eval_count_++));
  auto env = make_env(cfg_.env, cfg_.chunk_len, cfg_.max_episode_ticks,
                      cfg_.goal_tol, cfg_.reward_mode);
  if (!decoder_.frozen()) decoder_.freeze();
  double succ = 0.0;
  double ret = 0.0;
  double len = 0.0;
  const int da = cfg_.action_dim();
  for (int ep = 0; ep < episodes; ++ep) {
    env->reset(rng);
    double ep_ret = 0.0;
    while (!env->episode_over() && env->tick() < env->max_ticks()) {
      const Vec s = env->state();
      const Vec x = eval_latent(s, rng);
      const Vec chunk = decoder_.decode_flat(s, x);
      for (int k = 0; k < cfg_.chunk_len && !env->episode_over(); ++k) {
        const std::span<const double> a(
            chunk.data() + static_cast<std::size_t>(k) * da,
            static_cast<std::size_t>(da));
        const StepResult res = env->step(a);
        ep_ret += res.r;
      }
    }
    succ += env->at_goal(env->state()) ? 1.0 : 0.0;
    ret += ep_ret;
    len += env->tick();
  }
  const double n = static_cast<double>(episodes);
  return EvalStats{succ / n, ret / n, len / n};
}

std::vector<LatentRecord> Trainer::collect_latents(
    int episodes, const std::string& phase_tag) {
  if (episodes < 1) fail_arg("collect_latents: episodes must be >= 1");
  Rng rng = eval_base_.fork(0x7000 + static_cast<std::uint64_t>(eval_count_++));
  auto env = make_env(cfg_.env, cfg_.chunk_len, cfg_.max_episode_ticks,
                      cfg_.goal_tol, cfg_.reward_mode);
  if (!decoder_.frozen()) decoder_.freeze();
  const std::string run_id = hex64(config_hash(cfg_));
  const int da = cfg_.action_dim();
  std::vector<LatentRecord> out;
  for (int ep = 0; ep < episodes; ++ep) {
    env->reset(rng);
    std::vector<Vec> latents;
    while (!env->episode_over() && env->tick() < env->max_ticks()) {
      const Vec s = env->state();
      const Vec x = eval_latent(s, rng);
      latents.push_back(x);
      const Vec chunk = decoder_.decode_flat(s, x);
      for (int k = 0; k < cfg_.chunk_len && !env->episode_over(); ++k) {
        const std::span<const double> a(
            chunk.data() + static_cast<std::size_t>(k) * da,
            static_cast<std::size_t>(da));
        env->step(a);
      }
    }
    const bool success = env->at_goal(env->state());
    for (auto& x : latents)
      out.push_back(LatentRecord{run_id, phase_tag, success, std::move(x)});
  }
  return out;
}

Checkpoint Trainer::make_checkpoint() const {
  Checkpoint c;
  c.config_hash = config_hash(cfg_);
  c.add_bytes("config.text", config_text(cfg_));
  c.add_ints("actor.layer_sizes", actor_->net().layer_sizes());
  c.add_f64("actor.params", actor_->net().params());
  c.add_f64("actor_old.params", actor_old_->net().params());
  c.add_bytes("decoder.mode", decoder_.is_identity() ? "identity" : "network");
  if (!decoder_.is_identity()) {
    c.add_ints("decoder.layer_sizes", decoder_.net().layer_sizes());
    c.add_f64("decoder.params", decoder_.net().params());
  }
  c.add_scalar_i64("critic.count", critics_->members());
  c.add_ints("critic.layer_sizes", critics_->online(0).layer_sizes());
  for (int i = 0; i < critics_->members(); ++i) {
    const std::string tag = std::to_string(i);
    c.add_f64("critic.online." + tag + ".params",
              critics_->online(i).params());
    c.add_f64("critic.target." + tag + ".params",
              critics_->target(i).params());
  }
  c.add_ints("gauss.layer_sizes", gauss_->mean_net().layer_sizes());
  c.add_f64("gauss.params", gauss_->mean_net().params());
  c.add_f64("gauss.log_std", gauss_->log_std());
  c.add_scalar_i64("trainer.env_ticks", env_ticks_);
  c.add_scalar_i64("trainer.policy_steps", policy_steps_);
  c.add_scalar_i64("trainer.phase", phase_index_);
  return c;
}

void Trainer::load_prior(const Checkpoint& c) {
  check_layers(actor_->net(), c.ints("actor.layer_sizes"), "actor");
  set_params_checked(actor_->net(), c.f64("actor.params"), "actor");
  const std::string mode = c.text("decoder.mode");
  if (mode == "network") {
    if (cfg_.decoder_identity)
      fail("checkpoint: network decoder but config wants identity");
    Mlp net(c.ints("decoder.layer_sizes"), Activation::kTanh);
    set_params_checked(net, c.f64("decoder.params"), "decoder");
    decoder_ = BaseDecoder::network(std::move(net), cfg_.state_dim(),
                                    cfg_.action_dim(), cfg_.chunk_len);
    decoder_.freeze();
  } else if (mode == "identity") {
    if (!cfg_.decoder_identity)
      fail("checkpoint: identity decoder but config wants a network");
  } else {
    fail("checkpoint: unknown decoder mode '" + mode + "'");
  }
  check_layers(gauss_->mean_net(), c.ints("gauss.layer_sizes"), "gauss");
  set_params_checked(gauss_->mean_net_mutable(), c.f64("gauss.params"),
                     "gauss");
  const Vec& ls = c.f64("gauss.log_std");
  if (ls.size() != gauss_->log_std().size())
    fail("checkpoint: gauss log_std size mismatch");
  gauss_->log_std_mutable() = ls;
  sync_snapshot();
  pretrained_ = true;
}

void Trainer::restore(const Checkpoint& c) {
  load_prior(c);
  set_params_checked(actor_old_->net(), c.f64("actor_old.params"),
                     "actor_old");
  const int m = static_cast<int>(c.scalar_i64("critic.count"));
  if (m != critics_->members())
    fail("checkpoint: critic count mismatch (" + std::to_string(m) + " vs " +
         std::to_string(critics_->members()) + ")");
  check_layers(critics_->online(0), c.ints("critic.layer_sizes"), "critic");
  for (int i = 0; i < m; ++i) {
    const std::string tag = std::to_string(i);
    set_params_checked(critics_->online(i),
                       c.f64("critic.online." + tag + ".params"),
                       "critic online " + tag);
    set_params_checked(critics_->target(i),
                       c.f64("critic.target." + tag + ".params"),
                       "critic target " + tag);
  }
  env_ticks_ = c.scalar_i64("trainer.env_ticks");
  policy_steps_ = c.scalar_i64("trainer.policy_steps");
  phase_index_ = static_cast<int>(c.scalar_i64("trainer.phase"));
}

AblationTable run_ablation_suite(const TrainerConfig& cfg,
                                 const std::vector<std::uint64_t>& seeds) {
  if (seeds.size() < 3) fail_arg("run_ablation_suite: need at least 3 seeds");
  TrainerConfig base = cfg;
  base.algo = Algo::kFpo;
  base.no_ratio = false;
  base.no_clip = false;
  base.k1_explore = false;
  base.single_critic = false;
  validate_config(base);

  // One shared prior, built from the base seed, so every variant and seed
  // starts from the same policy.
  Trainer prior_trainer(base);
  prior_trainer.pretrain_bc(Trainer::generate_demos(base));
  const Checkpoint prior = prior_trainer.make_checkpoint();

  struct Variant {
    const char* name;
    bool TrainerConfig::* flag;
  };
  const Variant variants[] = {
      {"full", nullptr},
      {"no_ratio", &TrainerConfig::no_ratio},
      {"no_clip", &TrainerConfig::no_clip},
      {"k1_explore", &TrainerConfig::k1_explore},
      {"single_critic", &TrainerConfig::single_critic},
  };

  AblationTable table;
  table.seeds = seeds;
  for (const auto& v : variants) {
    AblationRow row;
    row.variant = v.name;
    for (const std::uint64_t seed : seeds) {
      TrainerConfig run_cfg = base;
      run_cfg.seed = seed;
      if (v.flag) run_cfg.*(v.flag) = true;
      try {
        Trainer t(run_cfg);
        t.load_prior(prior);
        const RunMetrics m = t.train();
        row.final_success.push_back(m.evals.back().success_rate);
        row.errors.emplace_back();
      } catch (const std::exception& e) {
        row.final_success.push_back(std::numeric_limits<double>::quiet_NaN());
        row.errors.emplace_back(e.what());
      }
    }
    std::vector<double> ok;
    for (double x : row.final_success)
      if (std::isfinite(x)) ok.push_back(x);
    row.median_success =
        ok.empty() ? std::numeric_limits<double>::quiet_NaN() : median(ok);
    table.rows.push_back(std::move(row));
  }
  std::stable_sort(table.rows.begin(), table.rows.end(),
                   [](const AblationRow& a, const AblationRow& b) {
                     const double am = std::isfinite(a.median_success)
                                           ? a.median_success
                                           : -1.0;
                     const double bm = std::isfinite(b.median_success)
                                           ? b.median_success
                                           : -1.0;
                     return am > bm;
                   });
  return table;
}

std::string format_ablation_table(const AblationTable& t) {
  std::string out = "variant\tmedian";
  for (const auto seed : t.seeds) out += "\tseed_" + std::to_string(seed);
  out += "\n";
  char buf[64];
  for (const auto& row : t.rows) {
    out += row.variant;
    std::snprintf(buf, sizeof(buf), "%.4f", row.median_success);
    out += std::string("\t") + buf;
    for (std::size_t i = 0; i < row.final_success.size(); ++i) {
      if (row.errors[i].empty()) {
        std::snprintf(buf, sizeof(buf), "%.4f", row.final_success[i]);
        out += std::string("\t") + buf;
      } else {
        out += "\tfail";
      }
    }
    out += "\n";
  }
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    for (std::size_t i = 0; i < t.rows[r].errors.size(); ++i)
      if (!t.rows[r].errors[i].empty())
        out += "# " + t.rows[r].variant + " seed " +
               std::to_string(t.seeds[i]) + ": " + t.rows[r].errors[i] + "\n";
  return out;
}

}  // namespace fpo
