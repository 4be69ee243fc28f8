#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>

#include "checkpoint.hpp"
#include "config.hpp"
#include "manifest.hpp"
#include "metrics.hpp"
#include "plot.hpp"
#include "records.hpp"

using namespace fpo;
namespace fs = std::filesystem;

namespace {

fs::path scratch_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "fpo_io_tests";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::string& data) {
  std::ofstream out(p, std::ios::binary);
  out << data;
}

RunMetrics sample_metrics() {
  RunMetrics m;
  m.config_hash = 0xdeadbeefcafe1234ull;
  m.evals.push_back({0, 0.25, -3.5, 100.0});
  m.evals.push_back({4096, 0.5, 1.0 / 3.0, 87.25});
  UpdatePoint u1;
  u1.env_ticks = 2048;
  u1.update_index = 0;
  u1.actor_loss = -0.125;
  u1.critic_loss = 0.75;
  u1.mean_rho = 1.0625;
  u1.clip_fraction = 0.5;
  u1.mean_dloss = -0.01;
  u1.policy_entropy = {};
  u1.adv_mean = 1e-17;
  u1.adv_std = 1.0;
  UpdatePoint u2;
  u2.env_ticks = 4096;
  u2.update_index = 1;
  u2.actor_loss = 0.0;
  u2.critic_loss = 0.5;
  u2.adv_std = 2.0;
  m.updates.push_back(u1);
  m.updates.push_back(u2);
  return m;
}

}  // namespace

TEST_CASE("config text round trips and hashes stably") {
  TrainerConfig cfg;
  cfg.seed = 42;
  cfg.actor_lr = 1.25e-4;
  cfg.actor_hidden = {16, 8};
  cfg.no_clip = true;
  const std::string text = config_text(cfg);
  const TrainerConfig back = parse_config_text(text);
  CHECK(config_text(back) == text);
  CHECK(config_hash(back) == config_hash(cfg));
  CHECK(back.seed == 42);
  CHECK(back.actor_lr == 1.25e-4);
  CHECK(back.actor_hidden == std::vector<int>{16, 8});
  CHECK(back.no_clip);

  TrainerConfig other = cfg;
  other.beta = 2.0;
  CHECK(config_hash(other) != config_hash(cfg));
}

TEST_CASE("config file save/load round trip") {
  TrainerConfig cfg;
  cfg.env = EnvKind::kPushBlock;
  cfg.algo = Algo::kGppo;
  cfg.reward_mode = RewardMode::kShaped;
  const auto path = scratch_file("cfg_roundtrip.cfg");
  save_config(cfg, path.string());
  const TrainerConfig back = load_config(path.string());
  CHECK(config_text(back) == config_text(cfg));
}

TEST_CASE("config parser: comments, blanks, later key wins") {
  const std::string text =
      "# leading comment\n"
      "\n"
      "seed=5\n"
      "gamma=0.5   # inline note\n"
      "seed=9\n";
  const TrainerConfig cfg = parse_config_text(text);
  CHECK(cfg.seed == 9);
  CHECK(cfg.gamma == 0.5);
}

TEST_CASE("config parser rejects unknown keys and bad values together") {
  CHECK_THROWS_WITH_AS(parse_config_text("bogus_key=1\n"),
                       doctest::Contains("unknown config key"),
                       std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text("flow_steps=abc\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text("just words\n"), std::invalid_argument);
  try {
    parse_config_text("bogus_key=1\ngamma=two\n");
    FAIL("expected throw");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("bogus_key") != std::string::npos);
    CHECK(msg.find("gamma=two") != std::string::npos);
  }
}

TEST_CASE("validate_config flags out-of-range fields by name") {
  TrainerConfig cfg;
  cfg.gamma = 1.5;
  CHECK_THROWS_WITH_AS(validate_config(cfg), doctest::Contains("gamma"),
                       std::invalid_argument);
  cfg.gamma = 0.99;
  cfg.clip_eps = 0.0;
  CHECK_THROWS_WITH_AS(validate_config(cfg), doctest::Contains("clip_eps"),
                       std::invalid_argument);
  cfg.clip_eps = 0.2;
  validate_config(cfg);
}

TEST_CASE("algo and reward mode name round trips") {
  for (Algo a : {Algo::kFpo, Algo::kRwfm, Algo::kGppo})
    CHECK(parse_algo(algo_name(a)) == a);
  for (RewardMode m : {RewardMode::kSparse, RewardMode::kShaped})
    CHECK(parse_reward_mode(reward_mode_name(m)) == m);
  CHECK_THROWS_AS(parse_algo("sac"), std::invalid_argument);
  CHECK_THROWS_AS(parse_reward_mode("dense"), std::invalid_argument);
}

TEST_CASE("metrics round trip preserves every field and optional") {
  const RunMetrics m = sample_metrics();
  const auto path = scratch_file("metrics_roundtrip.tsv");
  write_metrics(m, path.string());
  const RunMetrics back = read_metrics(path.string());
  CHECK(back == m);
  CHECK(!back.updates[1].mean_rho.has_value());
  CHECK(back.updates[0].mean_rho.has_value());
}

TEST_CASE("metrics writer is byte deterministic") {
  const RunMetrics m = sample_metrics();
  const auto p1 = scratch_file("metrics_a.tsv");
  const auto p2 = scratch_file("metrics_b.tsv");
  write_metrics(m, p1.string());
  write_metrics(m, p2.string());
  CHECK(slurp(p1) == slurp(p2));
}

TEST_CASE("check_metrics rejects unordered and non-finite rows") {
  RunMetrics m = sample_metrics();
  m.evals[1].env_ticks = 0;
  CHECK_THROWS_AS(check_metrics(m), std::runtime_error);

  RunMetrics m2 = sample_metrics();
  m2.updates[0].critic_loss = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(check_metrics(m2), std::runtime_error);

  RunMetrics m3 = sample_metrics();
  m3.updates[0].mean_rho = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(check_metrics(m3), std::runtime_error);

  check_metrics(sample_metrics());
}

TEST_CASE("read_metrics rejects malformed files") {
  const auto p = scratch_file("metrics_bad.tsv");
  spit(p, "not a metrics file\n");
  CHECK_THROWS_AS((void)read_metrics(p.string()), std::runtime_error);
  spit(p, "");
  CHECK_THROWS_AS((void)read_metrics(p.string()), std::runtime_error);
}

TEST_CASE("checkpoint blocks round trip bit-exactly") {
  Checkpoint c;
  c.config_hash = 0x1122334455667788ull;
  const Vec weights = {1.0, -0.5, 1e-300, 0.1 + 0.2};
  c.add_f64("actor", weights);
  c.add_scalar_i64("env_ticks", 123456789012345ll);
  c.add_ints("layers", {6, 32, 32, 8});
  c.add_bytes("config", "algo=fpo\n");

  const auto path = scratch_file("ckpt_roundtrip.bin");
  save_checkpoint(c, path.string());
  const Checkpoint back = load_checkpoint(path.string());

  CHECK(back.version == kCheckpointVersion);
  CHECK(back.config_hash == c.config_hash);
  CHECK(back.f64("actor") == weights);
  CHECK(back.scalar_i64("env_ticks") == 123456789012345ll);
  CHECK(back.ints("layers") == std::vector<int>{6, 32, 32, 8});
  CHECK(back.text("config") == "algo=fpo\n");
  CHECK(back.has("actor"));
  CHECK(!back.has("missing"));

  const auto path2 = scratch_file("ckpt_resave.bin");
  save_checkpoint(back, path2.string());
  CHECK(slurp(path) == slurp(path2));
}

TEST_CASE("checkpoint loader rejects corruption") {
  Checkpoint c;
  c.add_f64("w", Vec{1.0});
  const auto good = scratch_file("ckpt_good.bin");
  save_checkpoint(c, good.string());
  const std::string bytes = slurp(good);

  const auto bad_magic = scratch_file("ckpt_bad_magic.bin");
  std::string corrupt = bytes;
  corrupt[0] = 'X';
  spit(bad_magic, corrupt);
  CHECK_THROWS_WITH_AS((void)load_checkpoint(bad_magic.string()),
                       doctest::Contains("bad magic"), std::runtime_error);

  const auto bad_version = scratch_file("ckpt_bad_version.bin");
  corrupt = bytes;
  corrupt[8] = 2;
  spit(bad_version, corrupt);
  CHECK_THROWS_WITH_AS((void)load_checkpoint(bad_version.string()),
                       doctest::Contains("version"), std::runtime_error);

  const auto truncated = scratch_file("ckpt_truncated.bin");
  spit(truncated, bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_WITH_AS((void)load_checkpoint(truncated.string()),
                       doctest::Contains("truncated"), std::runtime_error);

  const auto trailing = scratch_file("ckpt_trailing.bin");
  spit(trailing, bytes + "zz");
  CHECK_THROWS_AS((void)load_checkpoint(trailing.string()),
                  std::runtime_error);

  CHECK_THROWS_AS((void)c.f64("missing"), std::runtime_error);
  CHECK_THROWS_AS((void)c.text("w"), std::runtime_error);
}

TEST_CASE("demo set round trips through JSONL") {
  DemoSet demos;
  demos.env = EnvKind::kPointReach;
  demos.state_dim = 6;
  demos.action_dim = 2;
  demos.chunk_len = 2;
  demos.config_hash = 0xabcdef0123456789ull;
  DemoEpisode e1;
  e1.success = true;
  e1.ticks = 4;
  e1.steps.push_back({{0.1, 0.2, 0.3, 0.4, 0.5, 0.6}, {1.0, 0.0, -1.0, 0.5}});
  e1.steps.push_back({{0.2, 0.3, 0.4, 0.5, 0.6, 0.7}, {0.0, 0.0, 0.25, -0.25}});
  DemoEpisode e2;
  e2.success = false;
  e2.ticks = 2;
  e2.steps.push_back({{0.0, 0.0, 0.0, 0.0, 0.0, 0.0}, {0.5, 0.5, 0.5, 0.5}});
  demos.episodes = {e1, e2};

  const auto path = scratch_file("demos.jsonl");
  save_demos(demos, path.string());
  const DemoSet back = load_demos(path.string());

  CHECK(back.env == demos.env);
  CHECK(back.state_dim == 6);
  CHECK(back.action_dim == 2);
  CHECK(back.chunk_len == 2);
  CHECK(back.config_hash == demos.config_hash);
  REQUIRE(back.episodes.size() == 2);
  CHECK(back.episodes[0].success);
  CHECK(back.episodes[0].ticks == 4);
  REQUIRE(back.episodes[0].steps.size() == 2);
  CHECK(back.episodes[0].steps[1].s == e1.steps[1].s);
  CHECK(back.episodes[0].steps[1].chunk == e1.steps[1].chunk);
  CHECK(!back.episodes[1].success);
  CHECK(back.success_rate() == doctest::Approx(0.5));
  CHECK(back.total_steps() == 3);
}

TEST_CASE("demo loader rejects files without a header") {
  const auto p = scratch_file("demos_bad.jsonl");
  spit(p, "{\"kind\":\"demo_episode\"}\n");
  CHECK_THROWS_AS((void)load_demos(p.string()), std::runtime_error);
  spit(p, "");
  CHECK_THROWS_AS((void)load_demos(p.string()), std::runtime_error);
  spit(p, "not json\n");
  CHECK_THROWS_AS((void)load_demos(p.string()), std::runtime_error);
}

TEST_CASE("latent records round trip") {
  std::vector<LatentRecord> recs;
  recs.push_back({"a1b2", "prior", false, {0.5, -0.5, 1.0}});
  recs.push_back({"a1b2", "final", true, {0.0, 0.25, -1.5}});
  const auto path = scratch_file("latents.jsonl");
  save_latents(recs, path.string());
  const auto back = load_latents(path.string());
  REQUIRE(back.size() == 2);
  CHECK(back[0].run_id == "a1b2");
  CHECK(back[0].phase == "prior");
  CHECK(!back[0].success);
  CHECK(back[0].x == recs[0].x);
  CHECK(back[1].phase == "final");
  CHECK(back[1].success);
  CHECK(back[1].x == recs[1].x);
}

TEST_CASE("manifest round trips") {
  RunManifest m;
  m.config_hash_hex = "00deadbeef001234";
  m.code_version = "0.1.0";
  m.seeds = {1, 2, 3};
  m.started_at = "2024-05-01T12:00:00Z";
  m.outputs = {{"metrics", "metrics.tsv"}, {"final", "final.ckpt"}};
  const auto path = scratch_file("manifest.json");
  write_manifest(m, path.string());
  const RunManifest back = read_manifest(path.string());
  CHECK(back.config_hash_hex == m.config_hash_hex);
  CHECK(back.code_version == m.code_version);
  CHECK(back.seeds == m.seeds);
  CHECK(back.started_at == m.started_at);
  CHECK(back.outputs == m.outputs);
}

TEST_CASE("iso8601_utc_now shape") {
  const std::string t = iso8601_utc_now();
  REQUIRE(t.size() == 20);
  CHECK(t[4] == '-');
  CHECK(t[10] == 'T');
  CHECK(t.back() == 'Z');
}

TEST_CASE("curve plot writes a well-formed SVG for any metrics") {
  const auto path = scratch_file("curve.svg");
  write_curve_svg(sample_metrics(), path.string(), 3);
  const std::string svg = slurp(path);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);

  RunMetrics empty;
  const auto path2 = scratch_file("curve_empty.svg");
  write_curve_svg(empty, path2.string(), 3);
  CHECK(slurp(path2).find("<svg") != std::string::npos);

  RunMetrics single;
  single.evals.push_back({0, 0.5, 1.0, 10.0});
  const auto path3 = scratch_file("curve_single.svg");
  write_curve_svg(single, path3.string(), 1);
  CHECK(slurp(path3).find("</svg>") != std::string::npos);
}

TEST_CASE("buffer dump emits one record per transition plus header") {
  TrajectoryBuffer buf(4);
  std::vector<Transition> traj(2);
  for (int i = 0; i < 2; ++i) {
    auto& t = traj[static_cast<std::size_t>(i)];
    t.s = {0.1 * i, 0.2};
    t.x = {1.0, -1.0};
    t.a = {0.5, 0.5};
    t.r = i == 1 ? 1.0 : 0.0;
    t.s_next = {0.1 * (i + 1), 0.2};
    t.done = i == 1;
    t.cfm_loss_init = 0.25;
    t.step_index = i;
  }
  buf.push_rollout(traj);
  const auto path = scratch_file("buffer.jsonl");
  dump_buffer(buf, path.string());
  const std::string text = slurp(path);
  CHECK(text.find("buffer_dump") != std::string::npos);
  std::size_t lines = 0;
  for (char ch : text)
    if (ch == '\n') ++lines;
  CHECK(lines == 3);
}
