#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "trainer.hpp"

using namespace fpo;
namespace fs = std::filesystem;

namespace {

// Deliberately tiny: exercises every code path in seconds.
TrainerConfig tiny_cfg() {
  TrainerConfig cfg;
  cfg.env = EnvKind::kPointReach;
  cfg.reward_mode = RewardMode::kSparse;
  cfg.seed = 7;
  cfg.num_envs = 2;
  cfg.chunk_len = 2;
  cfg.max_episode_ticks = 40;
  cfg.actor_hidden = {12, 12};
  cfg.critic_hidden = {12, 12};
  cfg.decoder_identity = true;
  cfg.flow_steps = 4;
  cfg.m_draws = 2;
  cfg.explore_k = 2;
  cfg.buffer_window = 3;
  cfg.t_rollout = 24;
  cfg.k_update = 3;
  cfg.batch_size = 32;
  cfg.total_ticks = 192;     // 4 phases of t_rollout * chunk_len ticks
  cfg.eval_interval = 96;
  cfg.eval_episodes = 3;
  cfg.bc_epochs = 4;
  cfg.bc_batch = 64;
  cfg.demo_episodes = 8;
  cfg.demo_noise = 0.1;
  cfg.demo_angle_bias = 0.2;
  return cfg;
}

fs::path scratch_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "fpo_trainer_tests";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("generate_demos is deterministic and stamps provenance") {
  const TrainerConfig cfg = tiny_cfg();
  const DemoSet a = Trainer::generate_demos(cfg);
  const DemoSet b = Trainer::generate_demos(cfg);
  CHECK(a.episodes.size() == 8);
  CHECK(a.env == cfg.env);
  CHECK(a.state_dim == cfg.state_dim());
  CHECK(a.action_dim == cfg.action_dim());
  CHECK(a.chunk_len == cfg.chunk_len);
  CHECK(a.config_hash == config_hash(cfg));
  REQUIRE(b.episodes.size() == a.episodes.size());
  for (std::size_t i = 0; i < a.episodes.size(); ++i) {
    CHECK(a.episodes[i].success == b.episodes[i].success);
    CHECK(a.episodes[i].ticks == b.episodes[i].ticks);
    REQUIRE(a.episodes[i].steps.size() == b.episodes[i].steps.size());
    for (std::size_t k = 0; k < a.episodes[i].steps.size(); ++k) {
      CHECK(a.episodes[i].steps[k].s == b.episodes[i].steps[k].s);
      CHECK(a.episodes[i].steps[k].chunk == b.episodes[i].steps[k].chunk);
    }
  }
}

TEST_CASE("near-expert demos overwhelmingly succeed") {
  TrainerConfig cfg = tiny_cfg();
  cfg.demo_noise = 0.0;
  cfg.demo_angle_bias = 0.0;
  cfg.max_episode_ticks = 120;
  cfg.demo_episodes = 20;
  const DemoSet demos = Trainer::generate_demos(cfg);
  CHECK(demos.success_rate() >= 0.9);
}

TEST_CASE("pretrain_bc rejects empty or mismatched demo sets") {
  Trainer tr(tiny_cfg());
  DemoSet empty;
  empty.state_dim = 6;
  empty.action_dim = 2;
  empty.chunk_len = 2;
  CHECK_THROWS_AS(tr.pretrain_bc(empty), std::invalid_argument);

  DemoSet wrong = Trainer::generate_demos(tiny_cfg());
  wrong.chunk_len = 4;
  CHECK_THROWS_AS(tr.pretrain_bc(wrong), std::invalid_argument);
  wrong.chunk_len = 2;
  wrong.state_dim = 8;
  CHECK_THROWS_AS(tr.pretrain_bc(wrong), std::invalid_argument);
}

TEST_CASE("behavior cloning improves the deterministic evaluation") {
  TrainerConfig cfg = tiny_cfg();
  cfg.demo_noise = 0.0;
  cfg.demo_angle_bias = 0.0;
  cfg.max_episode_ticks = 60;
  cfg.demo_episodes = 40;
  cfg.bc_epochs = 25;
  Trainer tr(cfg);
  const EvalStats before = tr.evaluate(20);
  tr.pretrain_bc(Trainer::generate_demos(cfg));
  CHECK(tr.pretrained());
  const EvalStats after = tr.evaluate(20);
  CHECK(after.success_rate > before.success_rate);
  CHECK(after.success_rate > 0.0);
}

TEST_CASE("tick budget: env_ticks == policy_steps * chunk_len == total") {
  const TrainerConfig cfg = tiny_cfg();
  Trainer tr(cfg);
  tr.train();
  CHECK(tr.env_ticks() == cfg.total_ticks);
  const Checkpoint c = tr.make_checkpoint();
  CHECK(c.scalar_i64("trainer.env_ticks") ==
        c.scalar_i64("trainer.policy_steps") * cfg.chunk_len);
  // 4 phases of 24 policy steps each.
  CHECK(tr.phase_index() == 4);
  CHECK(c.scalar_i64("trainer.policy_steps") == 96);
}

TEST_CASE("identical configs give identical metrics, byte for byte") {
  const TrainerConfig cfg = tiny_cfg();
  Trainer a(cfg);
  Trainer b(cfg);
  const RunMetrics ma = a.train();
  const RunMetrics mb = b.train();
  CHECK(ma == mb);
  const auto pa = scratch_file("det_a.tsv");
  const auto pb = scratch_file("det_b.tsv");
  write_metrics(ma, pa.string());
  write_metrics(mb, pb.string());
  CHECK(slurp(pa) == slurp(pb));
  CHECK(!ma.evals.empty());
  CHECK(ma.evals.back().env_ticks == cfg.total_ticks);
}

TEST_CASE("snapshot sync re-anchors: actor == snapshot, loss drops all zero") {
  const TrainerConfig cfg = tiny_cfg();
  Trainer tr(cfg);
  tr.pretrain_bc(Trainer::generate_demos(cfg));
  tr.rollout_phase();
  tr.update_phase();
  CHECK(tr.actor().net().params() == tr.actor_snapshot().net().params());
  const Vec drops = tr.buffer_loss_drops();
  REQUIRE(drops.size() == tr.buffer().size());
  for (double d : drops) CHECK(d == 0.0);
}

TEST_CASE("no_ratio pins rho to 1 and freezes the actor") {
  TrainerConfig cfg = tiny_cfg();
  cfg.no_ratio = true;
  Trainer tr(cfg);
  tr.pretrain_bc(Trainer::generate_demos(cfg));
  const Vec before = tr.actor().net().params();
  tr.rollout_phase();
  tr.update_phase();
  CHECK(tr.actor().net().params() == before);
  REQUIRE(!tr.metrics().updates.empty());
  const UpdatePoint& u = tr.metrics().updates.back();
  REQUIRE(u.mean_rho.has_value());
  CHECK(*u.mean_rho == 1.0);
  REQUIRE(u.clip_fraction.has_value());
  CHECK(*u.clip_fraction == 0.0);
}

TEST_CASE("checkpoint restore reproduces the trainer state exactly") {
  const TrainerConfig cfg = tiny_cfg();
  Trainer a(cfg);
  a.pretrain_bc(Trainer::generate_demos(cfg));
  a.rollout_phase();
  a.update_phase();
  const Checkpoint ca = a.make_checkpoint();
  const auto pa = scratch_file("state_a.ckpt");
  save_checkpoint(ca, pa.string());

  Trainer b(cfg);
  b.restore(load_checkpoint(pa.string()));
  CHECK(b.env_ticks() == a.env_ticks());
  CHECK(b.phase_index() == a.phase_index());
  CHECK(b.pretrained());
  const auto pb = scratch_file("state_b.ckpt");
  save_checkpoint(b.make_checkpoint(), pb.string());
  CHECK(slurp(pa) == slurp(pb));
}

TEST_CASE("load_prior copies the policy side only") {
  const TrainerConfig cfg = tiny_cfg();
  Trainer a(cfg);
  a.pretrain_bc(Trainer::generate_demos(cfg));
  a.rollout_phase();
  a.update_phase();
  const Checkpoint c = a.make_checkpoint();

  Trainer b(cfg);
  b.load_prior(c);
  CHECK(b.pretrained());
  CHECK(b.env_ticks() == 0);
  CHECK(b.phase_index() == 0);
  CHECK(b.actor().net().params() == c.f64("actor.params"));
  CHECK(b.actor_snapshot().net().params() == c.f64("actor.params"));
  // Critics are rebuilt, not restored: ensemble stays at its fresh init.
  Trainer fresh(cfg);
  CHECK(b.critics().online(0).params() == fresh.critics().online(0).params());
}

TEST_CASE("checkpoint rejects incompatible shapes") {
  const TrainerConfig cfg = tiny_cfg();
  Trainer a(cfg);
  const Checkpoint c = a.make_checkpoint();
  TrainerConfig other = cfg;
  other.actor_hidden = {6};
  Trainer b(other);
  CHECK_THROWS_AS(b.load_prior(c), std::runtime_error);
  TrainerConfig ident = cfg;
  ident.decoder_identity = false;
  Trainer d(ident);
  CHECK_THROWS_AS(d.load_prior(c), std::runtime_error);
}

TEST_CASE("reward-weighted and Gaussian baselines run the same loop") {
  TrainerConfig cfg = tiny_cfg();
  cfg.algo = Algo::kRwfm;
  Trainer rw(cfg);
  const RunMetrics mr = rw.train();
  REQUIRE(!mr.updates.empty());
  CHECK(!mr.updates.back().mean_rho.has_value());
  CHECK(!mr.updates.back().clip_fraction.has_value());
  CHECK(!mr.updates.back().policy_entropy.has_value());
  CHECK(mr.evals.back().env_ticks == cfg.total_ticks);

  cfg.algo = Algo::kGppo;
  Trainer gp(cfg);
  const RunMetrics mg = gp.train();
  REQUIRE(!mg.updates.empty());
  CHECK(mg.updates.back().mean_rho.has_value());
  CHECK(mg.updates.back().clip_fraction.has_value());
  CHECK(mg.updates.back().policy_entropy.has_value());
  CHECK(!mg.updates.back().mean_dloss.has_value());
  CHECK(mg.evals.back().env_ticks == cfg.total_ticks);
}

TEST_CASE("fpo updates report the ratio diagnostics") {
  const TrainerConfig cfg = tiny_cfg();
  Trainer tr(cfg);
  const RunMetrics m = tr.train();
  REQUIRE(!m.updates.empty());
  for (const auto& u : m.updates) {
    REQUIRE(u.mean_rho.has_value());
    CHECK(*u.mean_rho > 0.0);
    REQUIRE(u.clip_fraction.has_value());
    CHECK(*u.clip_fraction >= 0.0);
    CHECK(*u.clip_fraction <= 1.0);
    CHECK(u.mean_dloss.has_value());
    CHECK(!u.policy_entropy.has_value());
  }
}

TEST_CASE("evaluate and collect_latents leave training state untouched") {
  const TrainerConfig cfg = tiny_cfg();
  Trainer tr(cfg);
  tr.pretrain_bc(Trainer::generate_demos(cfg));
  tr.rollout_phase();
  const auto ticks = tr.env_ticks();
  const auto buffered = tr.buffer().size();
  const Vec params = tr.actor().net().params();
  (void)tr.evaluate(3);
  const auto latents = tr.collect_latents(2, "mid");
  CHECK(tr.env_ticks() == ticks);
  CHECK(tr.buffer().size() == buffered);
  CHECK(tr.actor().net().params() == params);
  CHECK(!latents.empty());
  for (const auto& r : latents) {
    CHECK(r.phase == "mid");
    CHECK(r.x.size() == static_cast<std::size_t>(cfg.latent_dim()));
    CHECK(r.run_id == hex64(config_hash(cfg)));
  }
}

TEST_CASE("train rejects a zero rollout budget") {
  TrainerConfig cfg = tiny_cfg();
  cfg.t_rollout = 0;
  Trainer tr(cfg);
  CHECK_THROWS_AS(tr.train(), std::invalid_argument);
}

TEST_CASE("evaluate validates the episode count") {
  Trainer tr(tiny_cfg());
  CHECK_THROWS_AS((void)tr.evaluate(0), std::invalid_argument);
  CHECK_THROWS_AS((void)tr.collect_latents(0, "x"), std::invalid_argument);
}

TEST_CASE("median helper") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
  CHECK(median({5.0}) == 5.0);
  CHECK_THROWS_AS(median({}), std::invalid_argument);
}
