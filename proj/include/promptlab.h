/*
 * promptlab C API: prompt-optimization engine, benchmark leaderboard
 * analytics, and chain-of-thought stability analysis.
 *
 * All entry points are thread-compatible: distinct sessions may be used from
 * distinct threads freely; a single session must not be shared without
 * external synchronization (it stores the last error message).
 *
 * Strings returned through `char**` out-parameters are heap-allocated and
 * must be released with plab_string_free().
 */

#ifndef PROMPTLAB_H
#define PROMPTLAB_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define PLAB_VERSION "0.1.0"

typedef enum plab_status {
  PLAB_OK = 0,
  PLAB_ERR_INVALID_ARG = 1,
  PLAB_ERR_CONFIG = 2,
  PLAB_ERR_IO = 3,
  PLAB_ERR_PARSE = 4,
  PLAB_ERR_PROTOCOL = 5,
  PLAB_ERR_BACKEND = 6,
  PLAB_ERR_UNAVAILABLE = 7,
  PLAB_ERR_INTERNAL = 8
} plab_status;

typedef struct plab_session plab_session;

const char* plab_version(void);
const char* plab_status_name(plab_status status);

plab_status plab_session_create(plab_session** out_session);
void plab_session_destroy(plab_session* session);

/* Message for the most recent failing call on this session; owned by the
 * session and valid until the next call. Never NULL. */
const char* plab_last_error(const plab_session* session);

/* Override the config's seed / parallelism for subsequent operations. */
plab_status plab_session_set_seed(plab_session* session, uint64_t seed);
plab_status plab_session_set_parallelism(plab_session* session, uint32_t parallelism);

void plab_string_free(char* s);

/* ------------------------------------------------------------------------
 * Operations. Artifacts are written under out_dir (pass NULL or "" to skip
 * writing); out_json, when non-NULL, receives a JSON summary/report.
 * ------------------------------------------------------------------------ */

/* Run BFRS or MIPROv2 for (method, backend, dataset) named in the config;
 * writes the winning assignment plus trial log. */
plab_status plab_optimize(plab_session* session, const char* config_path,
                          const char* method, const char* backend_id, const char* dataset,
                          const char* out_dir, char** out_json);

/* Test-split evaluation; assignment_path may be NULL for zero-shot methods
 * or name a saved optimize artifact. */
plab_status plab_evaluate(plab_session* session, const char* config_path,
                          const char* method, const char* backend_id, const char* dataset,
                          const char* assignment_path, const char* out_dir,
                          char** out_json);

/* Fill the whole backend x method x dataset grid and persist it. */
plab_status plab_run_matrix(plab_session* session, const char* config_path,
                            const char* out_dir, char** out_json);

/* Leaderboard report (macro stats, ceiling deltas, gains, ranks, flips) from
 * a fixtures CSV or a persisted grid JSON. */
plab_status plab_leaderboard(plab_session* session, const char* source,
                             const char* out_dir, char** out_json);

/* Accuracy-vs-prompt-token report for every method on one dataset/backend. */
plab_status plab_cost_report(plab_session* session, const char* config_path,
                             const char* backend_id, const char* dataset,
                             const char* out_dir, char** out_json);

/* Load a fixtures CSV (model_id,method,benchmark,score,ci_halfwidth,source)
 * into a persisted grid. */
plab_status plab_ingest_fixtures(plab_session* session, const char* csv_path,
                                 const char* out_dir, char** out_json);

/* Stability lab: worked two-path example, scenario file, or randomized
 * property sweep. */
plab_status plab_stability_demo(plab_session* session, char** out_json);
plab_status plab_stability_scenario(plab_session* session, const char* scenario_path,
                                    const char* out_dir, char** out_json);
plab_status plab_stability_sweep(plab_session* session, uint32_t n_triples, uint64_t seed,
                                 const char* out_dir, char** out_json);

/* ------------------------------------------------------------------------
 * Pure helpers (no session required).
 * ------------------------------------------------------------------------ */

/* sqrt(ln(2/delta) / (2 * minibatch_size)); PLAB_ERR_INVALID_ARG on bad args. */
plab_status plab_hoeffding_bound(uint32_t minibatch_size, double delta, double* out_bound);

/* Total variation / KL divergence between two length-n distributions. */
plab_status plab_tv_distance(const double* p, const double* q, size_t n, double* out);
plab_status plab_kl_divergence(const double* p, const double* q, size_t n, double* out);

/* Approximate token count (ceil(bytes/4)); -1 on NULL input. */
int64_t plab_count_tokens(const char* text);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* PROMPTLAB_H */
