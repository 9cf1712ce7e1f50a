#include "promptlab.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "promptlab/backend.hpp"
#include "promptlab/bfrs.hpp"
#include "promptlab/engine.hpp"
#include "promptlab/error.hpp"
#include "promptlab/stability.hpp"
#include "promptlab/util.hpp"

struct plab_session {
  std::string last_error;
  bool has_seed_override = false;
  uint64_t seed_override = 0;
  bool has_parallelism_override = false;
  int parallelism_override = 0;
};

namespace {

plab_status map_code(plab::ErrorCode code) {
  switch (code) {
    case plab::ErrorCode::InvalidArgument: return PLAB_ERR_INVALID_ARG;
    case plab::ErrorCode::Config: return PLAB_ERR_CONFIG;
    case plab::ErrorCode::Io: return PLAB_ERR_IO;
    case plab::ErrorCode::Parse: return PLAB_ERR_PARSE;
    case plab::ErrorCode::Protocol: return PLAB_ERR_PROTOCOL;
    case plab::ErrorCode::Backend: return PLAB_ERR_BACKEND;
    case plab::ErrorCode::Unavailable: return PLAB_ERR_UNAVAILABLE;
    case plab::ErrorCode::Internal: return PLAB_ERR_INTERNAL;
  }
  return PLAB_ERR_INTERNAL;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void emit_json(char** out_json, const nlohmann::json& doc) {
  if (out_json) *out_json = dup_string(doc.dump(2));
}

template <typename Fn>
plab_status guarded(plab_session* session, Fn&& fn) {
  if (!session) return PLAB_ERR_INVALID_ARG;
  session->last_error.clear();
  try {
    fn();
    return PLAB_OK;
  } catch (const plab::Error& e) {
    session->last_error = e.what();
    return map_code(e.code());
  } catch (const std::exception& e) {
    session->last_error = e.what();
    return PLAB_ERR_INTERNAL;
  }
}

plab::EngineConfig load_config_for(const plab_session* session, const char* config_path) {
  if (!config_path || !*config_path) throw plab::ConfigError("config path is required");
  plab::EngineConfig config = plab::load_engine_config(config_path);
  if (session->has_seed_override) {
    config.seed = session->seed_override;
    config.bfrs.rng_seed = session->seed_override;
    config.mipro.rng_seed = session->seed_override;
  }
  if (session->has_parallelism_override) {
    config.parallelism = session->parallelism_override;
    config.bfrs.parallelism = session->parallelism_override;
    config.mipro.parallelism = session->parallelism_override;
  }
  return config;
}

std::string require(const char* value, const char* name) {
  if (!value || !*value) throw plab::InvalidArgument(std::string(name) + " is required");
  return value;
}

}  // namespace

extern "C" {

const char* plab_version(void) { return PLAB_VERSION; }

const char* plab_status_name(plab_status status) {
  switch (status) {
    case PLAB_OK: return "ok";
    case PLAB_ERR_INVALID_ARG: return "invalid_argument";
    case PLAB_ERR_CONFIG: return "config_error";
    case PLAB_ERR_IO: return "io_error";
    case PLAB_ERR_PARSE: return "parse_error";
    case PLAB_ERR_PROTOCOL: return "protocol_error";
    case PLAB_ERR_BACKEND: return "backend_error";
    case PLAB_ERR_UNAVAILABLE: return "unavailable";
    case PLAB_ERR_INTERNAL: return "internal_error";
  }
  return "unknown";
}

plab_status plab_session_create(plab_session** out_session) {
  if (!out_session) return PLAB_ERR_INVALID_ARG;
  *out_session = new (std::nothrow) plab_session();
  return *out_session ? PLAB_OK : PLAB_ERR_INTERNAL;
}

void plab_session_destroy(plab_session* session) { delete session; }

const char* plab_last_error(const plab_session* session) {
  return session ? session->last_error.c_str() : "null session";
}

plab_status plab_session_set_seed(plab_session* session, uint64_t seed) {
  if (!session) return PLAB_ERR_INVALID_ARG;
  session->has_seed_override = true;
  session->seed_override = seed;
  return PLAB_OK;
}

plab_status plab_session_set_parallelism(plab_session* session, uint32_t parallelism) {
  if (!session || parallelism == 0) return PLAB_ERR_INVALID_ARG;
  session->has_parallelism_override = true;
  session->parallelism_override = static_cast<int>(parallelism);
  return PLAB_OK;
}

void plab_string_free(char* s) { std::free(s); }

plab_status plab_optimize(plab_session* session, const char* config_path,
                          const char* method, const char* backend_id, const char* dataset,
                          const char* out_dir, char** out_json) {
  return guarded(session, [&] {
    const auto config = load_config_for(session, config_path);
    emit_json(out_json, plab::op_optimize(config, require(method, "method"),
                                          require(backend_id, "backend"),
                                          require(dataset, "dataset"),
                                          out_dir ? out_dir : ""));
  });
}

plab_status plab_evaluate(plab_session* session, const char* config_path,
                          const char* method, const char* backend_id, const char* dataset,
                          const char* assignment_path, const char* out_dir,
                          char** out_json) {
  return guarded(session, [&] {
    const auto config = load_config_for(session, config_path);
    emit_json(out_json,
              plab::op_evaluate(config, method ? method : "", require(backend_id, "backend"),
                                require(dataset, "dataset"),
                                assignment_path ? assignment_path : "",
                                out_dir ? out_dir : ""));
  });
}

plab_status plab_run_matrix(plab_session* session, const char* config_path,
                            const char* out_dir, char** out_json) {
  return guarded(session, [&] {
    const auto config = load_config_for(session, config_path);
    emit_json(out_json, plab::op_run_matrix(config, out_dir ? out_dir : ""));
  });
}

plab_status plab_leaderboard(plab_session* session, const char* source,
                             const char* out_dir, char** out_json) {
  return guarded(session, [&] {
    emit_json(out_json, plab::op_leaderboard(require(source, "source"),
                                             out_dir ? out_dir : ""));
  });
}

plab_status plab_cost_report(plab_session* session, const char* config_path,
                             const char* backend_id, const char* dataset,
                             const char* out_dir, char** out_json) {
  return guarded(session, [&] {
    const auto config = load_config_for(session, config_path);
    emit_json(out_json, plab::op_cost_report(config, require(backend_id, "backend"),
                                             require(dataset, "dataset"),
                                             out_dir ? out_dir : ""));
  });
}

plab_status plab_ingest_fixtures(plab_session* session, const char* csv_path,
                                 const char* out_dir, char** out_json) {
  return guarded(session, [&] {
    emit_json(out_json, plab::op_ingest_fixtures(require(csv_path, "fixtures csv"),
                                                 out_dir ? out_dir : ""));
  });
}

plab_status plab_stability_demo(plab_session* session, char** out_json) {
  return guarded(session, [&] { emit_json(out_json, plab::op_stability_demo()); });
}

plab_status plab_stability_scenario(plab_session* session, const char* scenario_path,
                                    const char* out_dir, char** out_json) {
  return guarded(session, [&] {
    emit_json(out_json, plab::op_stability_scenario(require(scenario_path, "scenario"),
                                                    out_dir ? out_dir : ""));
  });
}

plab_status plab_stability_sweep(plab_session* session, uint32_t n_triples, uint64_t seed,
                                 const char* out_dir, char** out_json) {
  return guarded(session, [&] {
    emit_json(out_json, plab::op_stability_sweep(static_cast<int>(n_triples), seed,
                                                 out_dir ? out_dir : ""));
  });
}

plab_status plab_hoeffding_bound(uint32_t minibatch_size, double delta, double* out_bound) {
  if (!out_bound) return PLAB_ERR_INVALID_ARG;
  try {
    *out_bound = plab::hoeffding_bound(static_cast<int>(minibatch_size), delta);
    return PLAB_OK;
  } catch (const plab::Error& e) {
    return map_code(e.code());
  }
}

plab_status plab_tv_distance(const double* p, const double* q, size_t n, double* out) {
  if (!p || !q || !out || n == 0) return PLAB_ERR_INVALID_ARG;
  try {
    *out = plab::tv_distance(std::vector<double>(p, p + n), std::vector<double>(q, q + n));
    return PLAB_OK;
  } catch (const plab::Error& e) {
    return map_code(e.code());
  }
}

plab_status plab_kl_divergence(const double* p, const double* q, size_t n, double* out) {
  if (!p || !q || !out || n == 0) return PLAB_ERR_INVALID_ARG;
  try {
    *out = plab::kl_divergence(std::vector<double>(p, p + n),
                               std::vector<double>(q, q + n));
    return PLAB_OK;
  } catch (const plab::Error& e) {
    return map_code(e.code());
  }
}

int64_t plab_count_tokens(const char* text) {
  if (!text) return -1;
  return plab::approx_token_count(text);
}

}  // extern "C"
