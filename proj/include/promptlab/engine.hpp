#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "promptlab/backend.hpp"
#include "promptlab/bfrs.hpp"
#include "promptlab/dataset.hpp"
#include "promptlab/harness.hpp"
#include "promptlab/mipro.hpp"

namespace plab {

struct BackendEntry {
  std::string id;
  std::string type;  // "simulated" | "http" | "scripted"
  std::string model_id;
  SimulatedLmSpec sim;
  HttpBackendConfig http;
  std::vector<std::string> scripted_responses;
};

struct DatasetEntry {
  std::string name;
  std::string path;
  std::string baseline_instruction;
  DatasetConfig config;
};

struct EngineConfig {
  uint64_t seed = 0;
  int parallelism = 8;
  GenConfig gen;
  std::vector<BackendEntry> backends;
  std::vector<DatasetEntry> datasets;
  std::vector<Method> methods;
  BfrsParams bfrs;
  MiproParams mipro;
  std::vector<std::string> instruction_candidates;  // scripted proposer pool
  std::string config_hash;                          // fnv1a64 hex of the raw file
};

EngineConfig load_engine_config(const std::string& path);
std::unique_ptr<Backend> make_backend(const BackendEntry& entry);

const BackendEntry& find_backend(const EngineConfig& config, const std::string& id);
const DatasetEntry& find_dataset(const EngineConfig& config, const std::string& name);

// {config_hash, seed, version}: embedded in every artifact for provenance.
nlohmann::json provenance(const EngineConfig& config);

nlohmann::json assignment_to_json(const PromptAssignment& assignment);
PromptAssignment assignment_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Operations. Each returns a summary/report JSON and writes its artifacts
// under out_dir (empty out_dir: nothing written).
// ---------------------------------------------------------------------------
nlohmann::json op_optimize(const EngineConfig& config, const std::string& method,
                           const std::string& backend_id, const std::string& dataset,
                           const std::string& out_dir);

nlohmann::json op_evaluate(const EngineConfig& config, const std::string& method,
                           const std::string& backend_id, const std::string& dataset,
                           const std::string& assignment_path, const std::string& out_dir);

nlohmann::json op_run_matrix(const EngineConfig& config, const std::string& out_dir);

// `source`: fixtures CSV or persisted grid JSON (matched on extension).
nlohmann::json op_leaderboard(const std::string& source, const std::string& out_dir);

nlohmann::json op_cost_report(const EngineConfig& config, const std::string& backend_id,
                              const std::string& dataset, const std::string& out_dir);

nlohmann::json op_ingest_fixtures(const std::string& csv_path, const std::string& out_dir);

nlohmann::json op_stability_demo();
nlohmann::json op_stability_scenario(const std::string& scenario_path,
                                     const std::string& out_dir);
nlohmann::json op_stability_sweep(int n, uint64_t seed, const std::string& out_dir);

}  // namespace plab
