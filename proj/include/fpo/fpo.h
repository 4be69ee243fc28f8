/* C interface to the FPO training core.
 *
 * All functions are thread-compatible (no shared mutable state between
 * distinct handles); the error message is thread-local. Functions returning
 * fpo_status set the thread-local message on failure, readable via
 * fpo_last_error() until the next failing call on the same thread.
 *
 * Pointer-returning functions return NULL on failure (message set). Every
 * handle must be released with its matching _free function; _free accepts
 * NULL.
 */
#ifndef FPO_FPO_H
#define FPO_FPO_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fpo_status {
  FPO_OK = 0,
  FPO_ERR_INVALID_ARG = 1, /* bad value, bad key, failed validation */
  FPO_ERR_RUNTIME = 2,     /* I/O failure, corrupt file, training fault */
  FPO_ERR_BAD_HANDLE = 3   /* NULL handle or NULL required pointer */
} fpo_status;

typedef struct fpo_config fpo_config;
typedef struct fpo_trainer fpo_trainer;
typedef struct fpo_manifest fpo_manifest;

/* Library version string, static storage. */
const char* fpo_version(void);

/* Last error message on this thread; empty string if none. */
const char* fpo_last_error(void);

/* ---- configuration ---- */

/* Fresh config holding the pinned experiment defaults. */
fpo_config* fpo_config_create(void);
/* Parse and validate a key=value config file. */
fpo_config* fpo_config_load(const char* path);
fpo_status fpo_config_save(const fpo_config* cfg, const char* path);
/* Set one field by its config-file key; the value is validated. */
fpo_status fpo_config_set(fpo_config* cfg, const char* key, const char* value);
/* Canonical value string for one key into buf (NUL-terminated). */
fpo_status fpo_config_get(const fpo_config* cfg, const char* key, char* buf,
                          size_t buf_len);
/* FNV-1a hash of the canonical serialization; 0 on bad handle. */
uint64_t fpo_config_hash_value(const fpo_config* cfg);
void fpo_config_free(fpo_config* cfg);

/* ---- demonstrations ---- */

/* Scripted suboptimal demos per the config; JSON-lines file at out_path. */
fpo_status fpo_generate_demos(const fpo_config* cfg, const char* out_path);

/* ---- trainer ---- */

fpo_trainer* fpo_trainer_create(const fpo_config* cfg);
void fpo_trainer_free(fpo_trainer* t);

/* Behavior-cloning pretrain. demos_path NULL regenerates demos from the
 * config on the fly. */
fpo_status fpo_trainer_pretrain(fpo_trainer* t, const char* demos_path);

/* Full training run (pretrains first if not yet done). Writes the metrics
 * file when metrics_out is non-NULL. */
fpo_status fpo_trainer_train(fpo_trainer* t, const char* metrics_out);

/* Deterministic evaluation; any output pointer may be NULL. */
fpo_status fpo_trainer_evaluate(fpo_trainer* t, int episodes,
                                double* success_rate, double* mean_return,
                                double* mean_ep_len);

/* Checkpointing. restore rebuilds full training state; load_prior takes only
 * the policy side (actor, decoder, Gaussian head) and leaves critics and
 * counters fresh. */
fpo_status fpo_trainer_save(const fpo_trainer* t, const char* path);
fpo_status fpo_trainer_restore(fpo_trainer* t, const char* path);
fpo_status fpo_trainer_load_prior(fpo_trainer* t, const char* path);

/* Latent records from eval episodes, JSON lines at out_path. phase_tag is
 * one of "prior", "mid", "final". */
fpo_status fpo_trainer_dump_latents(fpo_trainer* t, int episodes,
                                    const char* phase_tag,
                                    const char* out_path);

/* Environment ticks consumed by training so far; -1 on bad handle. */
int64_t fpo_trainer_env_ticks(const fpo_trainer* t);

/* ---- suites and plots ---- */

/* Ablation suite {full, no_ratio, no_clip, k1_explore, single_critic} over
 * the given seeds (at least 3). Writes the ranked table to table_out. */
fpo_status fpo_run_ablation(const fpo_config* cfg, const uint64_t* seeds,
                            size_t n_seeds, const char* table_out);

/* Learning-curve SVG from a metrics file. smooth_window >= 1 is the moving
 * average width; 1 plots the raw series only. */
fpo_status fpo_plot_metrics(const char* metrics_path, const char* svg_path,
                            int smooth_window);

/* ---- run manifests ---- */

fpo_manifest* fpo_manifest_create(const fpo_config* cfg);
fpo_status fpo_manifest_add_seed(fpo_manifest* m, uint64_t seed);
fpo_status fpo_manifest_add_output(fpo_manifest* m, const char* name,
                                   const char* file);
fpo_status fpo_manifest_write(const fpo_manifest* m, const char* path);
void fpo_manifest_free(fpo_manifest* m);

#ifdef __cplusplus
}
#endif

#endif /* FPO_FPO_H */
