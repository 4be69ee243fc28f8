// Command-line front end over the C API in fpo/fpo.h.
//
// Exit codes: 0 success, 1 usage error, 2 invalid configuration or argument,
// 3 runtime failure (I/O, corrupt file, training fault), 4 internal error.

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fpo/fpo.h"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitInternal = 4;

struct Failure {
  int exit_code;
  std::string message;
};

int status_exit(fpo_status st) {
  switch (st) {
    case FPO_OK:
      return 0;
    case FPO_ERR_INVALID_ARG:
      return kExitInvalid;
    case FPO_ERR_RUNTIME:
      return kExitRuntime;
    default:
      return kExitInternal;
  }
}

void check(fpo_status st, const std::string& what) {
  if (st != FPO_OK) throw Failure{status_exit(st), what + ": " + fpo_last_error()};
}

using ConfigPtr = std::unique_ptr<fpo_config, decltype(&fpo_config_free)>;
using TrainerPtr = std::unique_ptr<fpo_trainer, decltype(&fpo_trainer_free)>;
using ManifestPtr = std::unique_ptr<fpo_manifest, decltype(&fpo_manifest_free)>;

struct CommonOpts {
  std::string config_path;
  std::string algo;
  std::string env;
  std::int64_t seed = -1;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "config file (key=value)");
  cmd->add_option("--algo", opts.algo, "algorithm")
      ->check(CLI::IsMember({"fpo", "rwfm", "gppo"}));
  cmd->add_option("--env", opts.env, "environment")
      ->check(CLI::IsMember({"pointreach", "pushblock"}));
  cmd->add_option("--seed", opts.seed, "override the config seed");
}

ConfigPtr build_config(const CommonOpts& opts) {
  fpo_config* raw = opts.config_path.empty()
                        ? fpo_config_create()
                        : fpo_config_load(opts.config_path.c_str());
  if (!raw)
    throw Failure{opts.config_path.empty() ? kExitInternal : kExitInvalid,
                  std::string("config: ") + fpo_last_error()};
  ConfigPtr cfg(raw, fpo_config_free);
  if (!opts.algo.empty())
    check(fpo_config_set(cfg.get(), "algo", opts.algo.c_str()), "config");
  if (!opts.env.empty())
    check(fpo_config_set(cfg.get(), "env", opts.env.c_str()), "config");
  if (opts.seed >= 0)
    check(fpo_config_set(cfg.get(), "seed", std::to_string(opts.seed).c_str()),
          "config");
  return cfg;
}

std::string run_dir(const std::string& out) {
  std::filesystem::create_directories(out);
  return out;
}

std::uint64_t seed_of(const fpo_config* cfg) {
  char buf[32];
  check(fpo_config_get(cfg, "seed", buf, sizeof(buf)), "config");
  return std::strtoull(buf, nullptr, 10);
}

ManifestPtr start_manifest(const fpo_config* cfg) {
  fpo_manifest* m = fpo_manifest_create(cfg);
  if (!m) throw Failure{kExitInternal, fpo_last_error()};
  ManifestPtr out(m, fpo_manifest_free);
  check(fpo_manifest_add_seed(out.get(), seed_of(cfg)), "manifest");
  return out;
}

TrainerPtr make_trainer(const fpo_config* cfg) {
  fpo_trainer* t = fpo_trainer_create(cfg);
  if (!t)
    throw Failure{kExitInvalid, std::string("trainer: ") + fpo_last_error()};
  return TrainerPtr(t, fpo_trainer_free);
}

int cmd_gen_demos(const CommonOpts& common, const std::string& out_path) {
  ConfigPtr cfg = build_config(common);
  check(fpo_generate_demos(cfg.get(), out_path.c_str()), "gen-demos");
  std::cout << "demos written to " << out_path << "\n";
  return 0;
}

int cmd_pretrain(const CommonOpts& common, const std::string& out,
                 const std::string& demos_path) {
  ConfigPtr cfg = build_config(common);
  const std::string dir = run_dir(out);
  TrainerPtr t = make_trainer(cfg.get());
  check(fpo_trainer_pretrain(t.get(),
                             demos_path.empty() ? nullptr : demos_path.c_str()),
        "pretrain");
  const std::string ckpt = dir + "/prior.ckpt";
  const std::string cfg_file = dir + "/config.txt";
  check(fpo_trainer_save(t.get(), ckpt.c_str()), "pretrain");
  check(fpo_config_save(cfg.get(), cfg_file.c_str()), "pretrain");
  double succ = 0.0, ret = 0.0, len = 0.0;
  char episodes[32];
  check(fpo_config_get(cfg.get(), "eval_episodes", episodes, sizeof(episodes)),
        "pretrain");
  check(fpo_trainer_evaluate(t.get(), std::atoi(episodes), &succ, &ret, &len),
        "pretrain");
  ManifestPtr man = start_manifest(cfg.get());
  check(fpo_manifest_add_output(man.get(), "checkpoint", "prior.ckpt"),
        "manifest");
  check(fpo_manifest_add_output(man.get(), "config", "config.txt"), "manifest");
  check(fpo_manifest_write(man.get(), (dir + "/manifest.json").c_str()),
        "manifest");
  std::printf("prior saved to %s\n", ckpt.c_str());
  std::printf("prior eval: success_rate=%.4f mean_return=%.4f mean_ep_len=%.2f\n",
              succ, ret, len);
  return 0;
}

int cmd_train(const CommonOpts& common, const std::string& out,
              const std::string& prior_ckpt) {
  ConfigPtr cfg = build_config(common);
  const std::string dir = run_dir(out);
  TrainerPtr t = make_trainer(cfg.get());
  if (!prior_ckpt.empty())
    check(fpo_trainer_load_prior(t.get(), prior_ckpt.c_str()), "train");
  const std::string metrics = dir + "/metrics.tsv";
  check(fpo_trainer_train(t.get(), metrics.c_str()), "train");
  const std::string ckpt = dir + "/final.ckpt";
  check(fpo_trainer_save(t.get(), ckpt.c_str()), "train");
  check(fpo_config_save(cfg.get(), (dir + "/config.txt").c_str()), "train");
  ManifestPtr man = start_manifest(cfg.get());
  check(fpo_manifest_add_output(man.get(), "metrics", "metrics.tsv"),
        "manifest");
  check(fpo_manifest_add_output(man.get(), "checkpoint", "final.ckpt"),
        "manifest");
  check(fpo_manifest_add_output(man.get(), "config", "config.txt"), "manifest");
  check(fpo_manifest_write(man.get(), (dir + "/manifest.json").c_str()),
        "manifest");
  std::printf("trained for %" PRId64 " env ticks; metrics at %s\n",
              fpo_trainer_env_ticks(t.get()), metrics.c_str());
  return 0;
}

int cmd_eval(const CommonOpts& common, const std::string& ckpt, int episodes) {
  ConfigPtr cfg = build_config(common);
  TrainerPtr t = make_trainer(cfg.get());
  check(fpo_trainer_restore(t.get(), ckpt.c_str()), "eval");
  if (episodes <= 0) {
    char buf[32];
    check(fpo_config_get(cfg.get(), "eval_episodes", buf, sizeof(buf)), "eval");
    episodes = std::atoi(buf);
  }
  double succ = 0.0, ret = 0.0, len = 0.0;
  check(fpo_trainer_evaluate(t.get(), episodes, &succ, &ret, &len), "eval");
  std::printf("episodes=%d success_rate=%.4f mean_return=%.4f mean_ep_len=%.2f\n",
              episodes, succ, ret, len);
  return 0;
}

int cmd_ablate(const CommonOpts& common, const std::string& out,
               std::vector<std::uint64_t> seeds) {
  ConfigPtr cfg = build_config(common);
  const std::string dir = run_dir(out);
  if (seeds.empty()) seeds = {1, 2, 3, 4, 5};
  const std::string table = dir + "/ablation.tsv";
  check(fpo_run_ablation(cfg.get(), seeds.data(), seeds.size(), table.c_str()),
        "ablate");
  ManifestPtr man = start_manifest(cfg.get());
  for (const auto s : seeds) check(fpo_manifest_add_seed(man.get(), s), "manifest");
  check(fpo_manifest_add_output(man.get(), "ablation", "ablation.tsv"),
        "manifest");
  check(fpo_manifest_write(man.get(), (dir + "/manifest.json").c_str()),
        "manifest");
  std::ifstream in(table);
  std::cout << in.rdbuf();
  return 0;
}

int cmd_dump_latents(const CommonOpts& common, const std::string& ckpt,
                     int episodes, const std::string& phase,
                     const std::string& out_path) {
  ConfigPtr cfg = build_config(common);
  TrainerPtr t = make_trainer(cfg.get());
  if (!ckpt.empty()) check(fpo_trainer_restore(t.get(), ckpt.c_str()), "dump-latents");
  check(fpo_trainer_dump_latents(t.get(), episodes, phase.c_str(),
                                 out_path.c_str()),
        "dump-latents");
  std::cout << "latents written to " << out_path << "\n";
  return 0;
}

int cmd_plot(const std::string& metrics, const std::string& out, int smooth) {
  check(fpo_plot_metrics(metrics.c_str(), out.c_str(), smooth), "plot");
  std::cout << "plot written to " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string("fpo: flow-policy training tool (") +
               fpo_version() + ")"};
  app.require_subcommand(1);

  CommonOpts gd_common;
  std::string gd_out = "demos.jsonl";
  auto* gen = app.add_subcommand("gen-demos", "write scripted demonstrations");
  add_common(gen, gd_common);
  gen->add_option("--out", gd_out, "output demo file");

  CommonOpts pt_common;
  std::string pt_out = "runs/prior";
  std::string pt_demos;
  auto* pre = app.add_subcommand("pretrain", "behavior-clone a prior policy");
  add_common(pre, pt_common);
  pre->add_option("--out", pt_out, "run directory");
  pre->add_option("--demos", pt_demos, "demo file (default: regenerate)");

  CommonOpts tr_common;
  std::string tr_out = "runs/train";
  std::string tr_ckpt;
  auto* tr = app.add_subcommand("train", "online fine-tuning run");
  add_common(tr, tr_common);
  tr->add_option("--out", tr_out, "run directory");
  tr->add_option("--checkpoint", tr_ckpt, "prior checkpoint to start from");

  CommonOpts ev_common;
  std::string ev_ckpt;
  int ev_episodes = 0;
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(ev, ev_common);
  ev->add_option("--checkpoint", ev_ckpt, "checkpoint to evaluate")->required();
  ev->add_option("--episodes", ev_episodes, "episode count (default: config)");

  CommonOpts ab_common;
  std::string ab_out = "runs/ablation";
  std::vector<std::uint64_t> ab_seeds;
  auto* ab = app.add_subcommand("ablate", "component-removal suite");
  add_common(ab, ab_common);
  ab->add_option("--out", ab_out, "run directory");
  ab->add_option("--seeds", ab_seeds, "seed list (default: 1 2 3 4 5)");

  CommonOpts dl_common;
  std::string dl_ckpt;
  std::string dl_phase = "final";
  std::string dl_out = "latents.jsonl";
  int dl_episodes = 10;
  auto* dl = app.add_subcommand("dump-latents", "record eval-time latents");
  add_common(dl, dl_common);
  dl->add_option("--checkpoint", dl_ckpt, "checkpoint to load");
  dl->add_option("--episodes", dl_episodes, "episode count");
  dl->add_option("--phase", dl_phase, "phase tag")
      ->check(CLI::IsMember({"prior", "mid", "final"}));
  dl->add_option("--out", dl_out, "output record file");

  std::string pl_metrics;
  std::string pl_out = "curve.svg";
  int pl_smooth = 5;
  auto* pl = app.add_subcommand("plot", "metrics file to SVG learning curve");
  pl->add_option("metrics", pl_metrics, "metrics file")->required();
  pl->add_option("--out", pl_out, "output SVG file");
  pl->add_option("--smooth", pl_smooth, "moving-average window")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen_demos(gd_common, gd_out);
    if (pre->parsed()) return cmd_pretrain(pt_common, pt_out, pt_demos);
    if (tr->parsed()) return cmd_train(tr_common, tr_out, tr_ckpt);
    if (ev->parsed()) return cmd_eval(ev_common, ev_ckpt, ev_episodes);
    if (ab->parsed()) return cmd_ablate(ab_common, ab_out, ab_seeds);
    if (dl->parsed())
      return cmd_dump_latents(dl_common, dl_ckpt, dl_episodes, dl_phase,
                              dl_out);
    if (pl->parsed()) return cmd_plot(pl_metrics, pl_out, pl_smooth);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << "\n";
    return f.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}
