#include "fpo/fpo.h"

#include <cstring>
#include <exception>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include "config.hpp"
#include "manifest.hpp"
#include "metrics.hpp"
#include "plot.hpp"
#include "records.hpp"
#include "trainer.hpp"

namespace {

const std::string kVersionString = std::string("fpo ") + fpo::kVersion;

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

fpo_status guard(const std::function<void()>& body) {
  try {
    body();
    return FPO_OK;
  } catch (const std::invalid_argument& e) {
    set_error(e.what());
    return FPO_ERR_INVALID_ARG;
  } catch (const std::exception& e) {
    set_error(e.what());
    return FPO_ERR_RUNTIME;
  } catch (...) {
    set_error("unknown error");
    return FPO_ERR_RUNTIME;
  }
}

std::map<std::string, std::string> config_kv(const fpo::TrainerConfig& cfg) {
  std::map<std::string, std::string> kv;
  std::stringstream ss(fpo::config_text(cfg));
  std::string line;
  while (std::getline(ss, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

}  // namespace

struct fpo_config {
  fpo::TrainerConfig cfg;
};

struct fpo_trainer {
  fpo::Trainer trainer;
  explicit fpo_trainer(const fpo::TrainerConfig& cfg) : trainer(cfg) {}
};

struct fpo_manifest {
  fpo::RunManifest m;
};

extern "C" {

const char* fpo_version(void) { return kVersionString.c_str(); }

const char* fpo_last_error(void) { return g_last_error.c_str(); }

fpo_config* fpo_config_create(void) { return new fpo_config{}; }

fpo_config* fpo_config_load(const char* path) {
  if (!path) {
    set_error("fpo_config_load: path is NULL");
    return nullptr;
  }
  fpo_config* out = nullptr;
  const fpo_status st = guard([&] {
    out = new fpo_config{fpo::load_config(path)};
  });
  return st == FPO_OK ? out : nullptr;
}

fpo_status fpo_config_save(const fpo_config* cfg, const char* path) {
  if (!cfg || !path) {
    set_error("fpo_config_save: NULL argument");
    return FPO_ERR_BAD_HANDLE;
  }
  return guard([&] { fpo::save_config(cfg->cfg, path); });
}

fpo_status fpo_config_set(fpo_config* cfg, const char* key,
                          const char* value) {
  if (!cfg || !key || !value) {
    set_error("fpo_config_set: NULL argument");
    return FPO_ERR_BAD_HANDLE;
  }
  return guard([&] {
    const std::string text = fpo::config_text(cfg->cfg) + std::string(key) +
                             "=" + value + "\n";
    cfg->cfg = fpo::parse_config_text(text);
  });
}

fpo_status fpo_config_get(const fpo_config* cfg, const char* key, char* buf,
                          size_t buf_len) {
  if (!cfg || !key || !buf || buf_len == 0) {
    set_error("fpo_config_get: NULL argument");
    return FPO_ERR_BAD_HANDLE;
  }
  const auto kv = config_kv(cfg->cfg);
  const auto it = kv.find(key);
  if (it == kv.end()) {
    set_error("fpo_config_get: unknown key '" + std::string(key) + "'");
    return FPO_ERR_INVALID_ARG;
  }
  if (it->second.size() + 1 > buf_len) {
    set_error("fpo_config_get: buffer too small");
    return FPO_ERR_INVALID_ARG;
  }
  std::memcpy(buf, it->second.c_str(), it->second.size() + 1);
  return FPO_OK;
}

uint64_t fpo_config_hash_value(const fpo_config* cfg) {
  if (!cfg) return 0;
  return fpo::config_hash(cfg->cfg);
}

void fpo_config_free(fpo_config* cfg) { delete cfg; }

fpo_status fpo_generate_demos(const fpo_config* cfg, const char* out_path) {
  if (!cfg || !out_path) {
    set_error("fpo_generate_demos: NULL argument");
    return FPO_ERR_BAD_HANDLE;
  }
  return guard([&] {
    const fpo::DemoSet demos = fpo::Trainer::generate_demos(cfg->cfg);
    fpo::save_demos(demos, out_path);
  });
}

fpo_trainer* fpo_trainer_create(const fpo_config* cfg) {
  if (!cfg) {
    set_error("fpo_trainer_create: NULL config");
    return nullptr;
  }
  fpo_trainer* out = nullptr;
  const fpo_status st = guard([&] { out = new fpo_trainer(cfg->cfg); });
  return st == FPO_OK ? out : nullptr;
}

void fpo_trainer_free(fpo_trainer* t) { delete t; }

fpo_status fpo_trainer_pretrain(fpo_trainer* t, const char* demos_path) {
  if (!t) {
    set_error("fpo_trainer_pretrain: NULL trainer");
    return FPO_ERR_BAD_HANDLE;
  }
  return guard([&] {
    const fpo::DemoSet demos =
        demos_path ? fpo::load_demos(demos_path)
                   : fpo::Trainer::generate_demos(t->trainer.config());
    t->trainer.pretrain_bc(demos);
  });
}

fpo_status fpo_trainer_train(fpo_trainer* t, const char* metrics_out) {
  if (!t) {
    set_error("fpo_trainer_train: NULL trainer");
    return FPO_ERR_BAD_HANDLE;
  }
  return guard([&] {
    const fpo::RunMetrics m = t->trainer.train();
    if (metrics_out) fpo::write_metrics(m, metrics_out);
  });
}

fpo_status fpo_trainer_evaluate(fpo_trainer* t, int episodes,
                                double* success_rate, double* mean_return,
                                double* mean_ep_len) {
  if (!t) {
    set_error("fpo_trainer_evaluate: NULL trainer");
    return FPO_ERR_BAD_HANDLE;
  }
  return guard([&] {
    const fpo::EvalStats es = t->trainer.evaluate(episodes);
    if (success_rate) *success_rate = es.success_rate;
    if (mean_return) *mean_return = es.mean_return;
    if (mean_ep_len) *mean_ep_len = es.mean_ep_len;
  });
}

fpo_status fpo_trainer_save(const fpo_trainer* t, const char* path) {
  if (!t || !path) {
    set_error("fpo_trainer_save: NULL argument");
    return FPO_ERR_BAD_HANDLE;
  }
  return guard([&] {
    fpo::save_checkpoint(t->trainer.make_checkpoint(), path);
  });
}

fpo_status fpo_trainer_restore(fpo_trainer* t, const char* path) {
  if (!t || !path) {
    set_error("fpo_trainer_restore: NULL argument");
    return FPO_ERR_BAD_HANDLE;
  }
  return guard([&] { t->trainer.restore(fpo::load_checkpoint(path)); });
}

fpo_status fpo_trainer_load_prior(fpo_trainer* t, const char* path) {
  if (!t || !path) {
    set_error("fpo_trainer_load_prior: NULL argument");
    return FPO_ERR_BAD_HANDLE;
  }
  return guard([&] { t->trainer.load_prior(fpo::load_checkpoint(path)); });
}

fpo_status fpo_trainer_dump_latents(fpo_trainer* t, int episodes,
                                    const char* phase_tag,
                                    const char* out_path) {
  if (!t || !phase_tag || !out_path) {
    set_error("fpo_trainer_dump_latents: NULL argument");
    return FPO_ERR_BAD_HANDLE;
  }
  return guard([&] {
    const auto records = t->trainer.collect_latents(episodes, phase_tag);
    fpo::save_latents(records, out_path);
  });
}

int64_t fpo_trainer_env_ticks(const fpo_trainer* t) {
  if (!t) return -1;
  return t->trainer.env_ticks();
}

fpo_status fpo_run_ablation(const fpo_config* cfg, const uint64_t* seeds,
                            size_t n_seeds, const char* table_out) {
  if (!cfg || !seeds || !table_out) {
    set_error("fpo_run_ablation: NULL argument");
    return FPO_ERR_BAD_HANDLE;
  }
  return guard([&] {
    const std::vector<std::uint64_t> s(seeds, seeds + n_seeds);
    const fpo::AblationTable table = fpo::run_ablation_suite(cfg->cfg, s);
    fpo::write_text_file(table_out, fpo::format_ablation_table(table));
  });
}

fpo_status fpo_plot_metrics(const char* metrics_path, const char* svg_path,
                            int smooth_window) {
  if (!metrics_path || !svg_path) {
    set_error("fpo_plot_metrics: NULL argument");
    return FPO_ERR_BAD_HANDLE;
  }
  return guard([&] {
    const fpo::RunMetrics m = fpo::read_metrics(metrics_path);
    fpo::write_curve_svg(m, svg_path, smooth_window);
  });
}

fpo_manifest* fpo_manifest_create(const fpo_config* cfg) {
  if (!cfg) {
    set_error("fpo_manifest_create: NULL config");
    return nullptr;
  }
  auto* out = new fpo_manifest{};
  out->m.config_hash_hex = fpo::hex64(fpo::config_hash(cfg->cfg));
  out->m.code_version = kVersionString;
  out->m.started_at = fpo::iso8601_utc_now();
  return out;
}

fpo_status fpo_manifest_add_seed(fpo_manifest* m, uint64_t seed) {
  if (!m) {
    set_error("fpo_manifest_add_seed: NULL manifest");
    return FPO_ERR_BAD_HANDLE;
  }
  m->m.seeds.push_back(seed);
  return FPO_OK;
}

fpo_status fpo_manifest_add_output(fpo_manifest* m, const char* name,
                                   const char* file) {
  if (!m || !name || !file) {
    set_error("fpo_manifest_add_output: NULL argument");
    return FPO_ERR_BAD_HANDLE;
  }
  m->m.outputs[name] = file;
  return FPO_OK;
}

fpo_status fpo_manifest_write(const fpo_manifest* m, const char* path) {
  if (!m || !path) {
    set_error("fpo_manifest_write: NULL argument");
    return FPO_ERR_BAD_HANDLE;
  }
  return guard([&] { fpo::write_manifest(m->m, path); });
}

void fpo_manifest_free(fpo_manifest* m) { delete m; }

}  // extern "C"
