#include "promptlab/engine.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>

#include "promptlab/error.hpp"
#include "promptlab/leaderboard.hpp"
#include "promptlab/stability.hpp"
#include "promptlab/svg.hpp"
#include "promptlab/util.hpp"

namespace plab {

using nlohmann::json;

namespace {

std::string artifact_path(const std::string& out_dir, const std::string& name) {
  return (std::filesystem::path(out_dir) / name).string();
}

void write_artifact(const std::string& out_dir, const std::string& name,
                    const std::string& body) {
  if (out_dir.empty()) return;
  write_file(artifact_path(out_dir, name), body);
}

void write_json_artifact(const std::string& out_dir, const std::string& name,
                         const json& doc) {
  write_artifact(out_dir, name, doc.dump(2) + "\n");
}

std::string slug(const std::string& s) {
  std::string out;
  for (char c : s) {
    out += (std::isalnum(static_cast<unsigned char>(c)) != 0) ? c : '-';
  }
  return out;
}

GenConfig gen_for(const EngineConfig& config, const BackendEntry& backend) {
  GenConfig gen = config.gen;
  if (gen.model_id.empty()) gen.model_id = backend.model_id;
  return gen;
}

}  // namespace

EngineConfig load_engine_config(const std::string& path) {
  const std::string raw = read_file(path);
  json doc;
  try {
    doc = json::parse(raw);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": malformed config JSON: " + e.what());
  }
  EngineConfig config;
  config.config_hash = to_hex(fnv1a64(raw));
  try {
    config.seed = doc.value("seed", uint64_t{0});
    config.parallelism = doc.value("parallelism", 8);
    if (config.parallelism < 1) throw ConfigError("parallelism must be >= 1");
    if (doc.contains("gen")) {
      const auto& gen = doc["gen"];
      config.gen.temperature = gen.value("temperature", 0.0);
      config.gen.max_output_tokens = gen.value("max_output_tokens", 200);
      if (config.gen.temperature < 0.0) throw ConfigError("temperature must be >= 0");
      if (config.gen.max_output_tokens < 1 || config.gen.max_output_tokens > 200) {
        throw ConfigError("max_output_tokens must lie in [1, 200]");
      }
    }
    for (const auto& entry : doc.value("backends", json::array())) {
      BackendEntry backend;
      backend.id = entry.at("id").get<std::string>();
      backend.type = entry.value("type", "simulated");
      backend.model_id = entry.value("model_id", backend.id);
      if (backend.type == "simulated") {
        backend.sim.base_accuracy = entry.value("base_accuracy", 0.5);
        backend.sim.cot_bonus = entry.value("cot_bonus", 0.0);
        backend.sim.per_demo_bonus = entry.value("per_demo_bonus", 0.0);
        backend.sim.global_seed = entry.value("seed", uint64_t{0});
        if (entry.contains("instruction_bonuses")) {
          for (const auto& [text, bonus] : entry["instruction_bonuses"].items()) {
            backend.sim.instruction_bonuses[text] = bonus.get<double>();
          }
        }
      } else if (backend.type == "http") {
        backend.http.endpoint = entry.at("endpoint").get<std::string>();
        backend.http.path = entry.value("path", backend.http.path);
        backend.http.model_id = backend.model_id;
        backend.http.api_key_env = entry.value("api_key_env", backend.http.api_key_env);
        backend.http.timeout_s = entry.value("timeout_s", backend.http.timeout_s);
        backend.http.max_retries = entry.value("max_retries", backend.http.max_retries);
        backend.http.base_delay_ms = entry.value("base_delay_ms", backend.http.base_delay_ms);
      } else if (backend.type == "scripted") {
        backend.scripted_responses =
            entry.at("responses").get<std::vector<std::string>>();
      } else {
        throw ConfigError("unknown backend type: " + backend.type);
      }
      config.backends.push_back(std::move(backend));
    }
    for (const auto& entry : doc.value("datasets", json::array())) {
      DatasetEntry dataset;
      dataset.name = entry.at("name").get<std::string>();
      dataset.path = entry.at("path").get<std::string>();
      dataset.baseline_instruction = entry.at("baseline_instruction").get<std::string>();
      dataset.config.metric = metric_from_name(entry.value("metric", "exact_match"));
      dataset.config.rel_tol = entry.value("rel_tol", 0.05);
      dataset.config.train_fraction = entry.value("train_fraction", 0.9);
      dataset.config.split_seed = entry.value("split_seed", config.seed);
      config.datasets.push_back(std::move(dataset));
    }
    for (const auto& name : doc.value("methods", json::array())) {
      config.methods.push_back(method_from_name(name.get<std::string>()));
    }
    if (doc.contains("bfrs")) {
      const auto& b = doc["bfrs"];
      config.bfrs.k = b.value("k", config.bfrs.k);
      config.bfrs.trials = b.value("trials", config.bfrs.trials);
      config.bfrs.minibatch = b.value("minibatch", config.bfrs.minibatch);
      config.bfrs.tau = b.value("tau", config.bfrs.tau);
      config.bfrs.rng_seed = b.value("rng_seed", config.seed);
      config.bfrs.full_reeval = b.value("full_reeval", config.bfrs.full_reeval);
    } else {
      config.bfrs.rng_seed = config.seed;
    }
    if (doc.contains("mipro")) {
      const auto& m = doc["mipro"];
      config.mipro.trials = m.value("trials", config.mipro.trials);
      config.mipro.minibatch = m.value("minibatch", config.mipro.minibatch);
      config.mipro.escalation_period =
          m.value("escalation_period", config.mipro.escalation_period);
      config.mipro.top_k_escalate = m.value("top_k_escalate", config.mipro.top_k_escalate);
      config.mipro.gamma = m.value("gamma", config.mipro.gamma);
      config.mipro.n_instruction_candidates =
          m.value("n_instruction_candidates", config.mipro.n_instruction_candidates);
      config.mipro.n_demoset_candidates =
          m.value("n_demoset_candidates", config.mipro.n_demoset_candidates);
      config.mipro.k = m.value("k", config.mipro.k);
      config.mipro.tau = m.value("tau", config.mipro.tau);
      config.mipro.rng_seed = m.value("rng_seed", config.seed);
    } else {
      config.mipro.rng_seed = config.seed;
    }
    config.instruction_candidates =
        doc.value("instruction_candidates", std::vector<std::string>{});
  } catch (const json::exception& e) {
    throw ConfigError(path + ": config shape error: " + e.what());
  }
  config.bfrs.parallelism = config.parallelism;
  config.mipro.parallelism = config.parallelism;
  return config;
}

std::unique_ptr<Backend> make_backend(const BackendEntry& entry) {
  if (entry.type == "simulated") {
    return std::make_unique<SimulatedBackend>(entry.sim, entry.model_id);
  }
  if (entry.type == "http") {
    return std::make_unique<HttpBackend>(entry.http);
  }
  if (entry.type == "scripted") {
    return std::make_unique<ScriptedBackend>(entry.scripted_responses, true, entry.model_id);
  }
  throw ConfigError("unknown backend type: " + entry.type);
}

const BackendEntry& find_backend(const EngineConfig& config, const std::string& id) {
  for (const auto& backend : config.backends) {
    if (backend.id == id) return backend;
  }
  throw ConfigError("backend not found in config: " + id);
}

const DatasetEntry& find_dataset(const EngineConfig& config, const std::string& name) {
  for (const auto& dataset : config.datasets) {
    if (dataset.name == name) return dataset;
  }
  throw ConfigError("dataset not found in config: " + name);
}

json provenance(const EngineConfig& config) {
  return {{"config_hash", config.config_hash},
          {"seed", config.seed},
          {"version", kVersion}};
}

json assignment_to_json(const PromptAssignment& assignment) {
  json modules = json::array();
  for (size_t m = 0; m < assignment.instructions.size(); ++m) {
    json demos = json::array();
    for (const auto& demo : assignment.demos[m]) {
      json d = {{"input", demo.module_input},
                {"output", demo.module_output},
                {"source_id", demo.source_example_id}};
      if (demo.reasoning) d["reasoning"] = *demo.reasoning;
      demos.push_back(std::move(d));
    }
    modules.push_back({{"instruction", assignment.instructions[m]}, {"demos", demos}});
  }
  return {{"method", method_name(assignment.method)}, {"modules", modules}};
}

PromptAssignment assignment_from_json(const json& j) {
  PromptAssignment assignment;
  try {
    assignment.method = method_from_name(j.at("method").get<std::string>());
    for (const auto& module : j.at("modules")) {
      assignment.instructions.push_back(module.at("instruction").get<std::string>());
      std::vector<Demonstration> demos;
      for (const auto& d : module.value("demos", json::array())) {
        Demonstration demo;
        demo.module_input = d.at("input").get<std::string>();
        demo.module_output = d.at("output").get<std::string>();
        demo.source_example_id = d.value("source_id", "");
        if (d.contains("reasoning")) demo.reasoning = d["reasoning"].get<std::string>();
        demos.push_back(std::move(demo));
      }
      assignment.demos.push_back(std::move(demos));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed assignment JSON: ") + e.what());
  }
  return assignment;
}

namespace {

std::unique_ptr<Backend> make_proposer(const EngineConfig& config,
                                       const std::string& task_name) {
  if (!config.instruction_candidates.empty()) {
    return std::make_unique<ScriptedBackend>(config.instruction_candidates, true,
                                             "scripted-proposer");
  }
  return std::make_unique<TemplateProposerBackend>(task_name);
}

OptimizationResult run_optimizer(const EngineConfig& config, Method method,
                                 Backend& backend, const Dataset& dataset,
                                 const std::string& baseline_instruction,
                                 const GenConfig& gen) {
  const Program seed = init_from_baseline(baseline_instruction, method);
  if (method == Method::Bfrs) {
    return bfrs_optimize(seed, backend, dataset.train(), dataset.val(), config.bfrs, gen);
  }
  if (method == Method::MiproV2) {
    auto proposer = make_proposer(config, dataset.name);
    return mipro_optimize(seed, backend, *proposer, dataset.train(), dataset.val(),
                          config.mipro, gen);
  }
  throw InvalidArgument(std::string("method has no optimizer: ") + method_name(method));
}

json eval_report_json(const EvalReport& report) {
  json items = json::array();
  for (const auto& item : report.per_item) {
    items.push_back(
        {{"id", item.example_id}, {"score", item.score}, {"failed", item.failed}});
  }
  return {{"aggregate", report.aggregate},
          {"ci_lo", report.ci_lo},
          {"ci_hi", report.ci_hi},
          {"n", report.n},
          {"failed_items", report.failed_items},
          {"valid", report.valid},
          {"per_item", items}};
}

std::string runlog_jsonl(const EvalReport& report) {
  std::string out;
  for (const auto& item : report.per_item) {
    out += json{{"id", item.example_id}, {"score", item.score}, {"failed", item.failed}}
               .dump() +
           "\n";
  }
  return out;
}

}  // namespace

json op_optimize(const EngineConfig& config, const std::string& method_str,
                 const std::string& backend_id, const std::string& dataset_name,
                 const std::string& out_dir) {
  const Method method = method_from_name(method_str);
  if (method != Method::Bfrs && method != Method::MiproV2) {
    throw ConfigError("optimize supports bfrs and miprov2, got " + method_str);
  }
  const BackendEntry& backend_entry = find_backend(config, backend_id);
  const DatasetEntry& dataset_entry = find_dataset(config, dataset_name);
  const Dataset dataset =
      load_dataset(dataset_entry.path, dataset_entry.config, dataset_entry.name);
  auto backend = make_backend(backend_entry);
  const GenConfig gen = gen_for(config, backend_entry);

  const OptimizationResult result = run_optimizer(
      config, method, *backend, dataset, dataset_entry.baseline_instruction, gen);

  json trials = json::array();
  for (const auto& trial : result.trials) {
    trials.push_back({{"trial", trial.trial_index},
                      {"score", trial.score},
                      {"instruction_idx", trial.instruction_idx},
                      {"demo_set_idx", trial.demo_set_idx},
                      {"demo_pool_idx", trial.demo_pool_idx}});
  }
  json artifact = {{"provenance", provenance(config)},
                   {"method", method_name(method)},
                   {"backend", backend_id},
                   {"dataset", dataset_name},
                   {"baseline_instruction", dataset_entry.baseline_instruction},
                   {"best_score", result.best_score},
                   {"best_trial_index", result.best_trial_index},
                   {"empty_pool_fallback", result.empty_pool_fallback},
                   {"best_assignment", assignment_to_json(result.best_assignment)},
                   {"trials", trials}};
  const std::string name =
      "optimize_" + slug(method_str) + "_" + slug(dataset_name) + "_" + slug(backend_id) +
      ".json";
  write_json_artifact(out_dir, name, artifact);

  json summary = artifact;
  summary.erase("trials");
  summary["trial_count"] = result.trials.size();
  if (!out_dir.empty()) summary["artifact"] = artifact_path(out_dir, name);
  return summary;
}

json op_evaluate(const EngineConfig& config, const std::string& method_str,
                 const std::string& backend_id, const std::string& dataset_name,
                 const std::string& assignment_path, const std::string& out_dir) {
  const BackendEntry& backend_entry = find_backend(config, backend_id);
  const DatasetEntry& dataset_entry = find_dataset(config, dataset_name);
  const Dataset dataset =
      load_dataset(dataset_entry.path, dataset_entry.config, dataset_entry.name);
  auto backend = make_backend(backend_entry);

  Method method;
  Program program = [&] {
    if (!assignment_path.empty()) {
      json doc;
      try {
        doc = json::parse(read_file(assignment_path));
      } catch (const json::exception& e) {
        throw ParseError(assignment_path + ": malformed JSON: " + e.what());
      }
      const json& assignment_doc =
          doc.contains("best_assignment") ? doc["best_assignment"] : doc;
      const PromptAssignment assignment = assignment_from_json(assignment_doc);
      Program p = init_from_baseline(dataset_entry.baseline_instruction, assignment.method);
      p.assignment = assignment;
      validate_program(p);
      return p;
    }
    const Method m = method_from_name(method_str);
    if (m == Method::Bfrs || m == Method::MiproV2) {
      throw ConfigError("evaluate of an optimizer method requires --assignment");
    }
    return init_from_baseline(dataset_entry.baseline_instruction, m);
  }();
  method = program.assignment.method;

  EvalOptions opts;
  opts.parallelism = config.parallelism;
  opts.gen = gen_for(config, backend_entry);
  opts.ci_seed = derive_seed(config.seed, "eval_ci");
  const EvalReport report = evaluate_full(program, *backend, dataset.test(), opts);

  json artifact = {{"provenance", provenance(config)},
                   {"method", method_name(method)},
                   {"backend", backend_id},
                   {"dataset", dataset_name},
                   {"split", "test"},
                   {"report", eval_report_json(report)}};
  const std::string base =
      "eval_" + slug(method_name(method)) + "_" + slug(dataset_name) + "_" + slug(backend_id);
  write_json_artifact(out_dir, base + ".json", artifact);
  write_artifact(out_dir, base + ".runlog.jsonl", runlog_jsonl(report));

  json summary = {{"provenance", provenance(config)},
                  {"method", method_name(method)},
                  {"backend", backend_id},
                  {"dataset", dataset_name},
                  {"aggregate", report.aggregate},
                  {"ci", {report.ci_lo, report.ci_hi}},
                  {"n", report.n},
                  {"failed_items", report.failed_items},
                  {"valid", report.valid}};
  if (!out_dir.empty()) summary["artifact"] = artifact_path(out_dir, base + ".json");
  return summary;
}

json op_run_matrix(const EngineConfig& config, const std::string& out_dir) {
  if (config.backends.empty() || config.datasets.empty() || config.methods.empty()) {
    throw ConfigError("run_matrix needs backends, datasets, and methods");
  }
  ResultGrid grid;
  for (const auto& backend_entry : config.backends) {
    auto backend = make_backend(backend_entry);
    const GenConfig gen = gen_for(config, backend_entry);
    for (const auto& dataset_entry : config.datasets) {
      const Dataset dataset =
          load_dataset(dataset_entry.path, dataset_entry.config, dataset_entry.name);
      for (Method method : config.methods) {
        GridCell cell;
        try {
          Program program = [&] {
            if (method == Method::Bfrs || method == Method::MiproV2) {
              const auto result =
                  run_optimizer(config, method, *backend, dataset,
                                dataset_entry.baseline_instruction, gen);
              Program p =
                  init_from_baseline(dataset_entry.baseline_instruction, method);
              p.assignment = result.best_assignment;
              return p;
            }
            return init_from_baseline(dataset_entry.baseline_instruction, method);
          }();
          EvalOptions opts;
          opts.parallelism = config.parallelism;
          opts.gen = gen;
          opts.ci_seed = derive_seed(config.seed, "matrix_ci");
          const EvalReport report = evaluate_full(program, *backend, dataset.test(), opts);
          cell.score_percent = report.aggregate * 100.0;
          cell.ci_halfwidth = (report.ci_hi - report.ci_lo) * 50.0;
          cell.n = report.n;
          cell.source = "computed";
          cell.ok = report.valid;
          if (!report.valid) cell.error = "more than 20% of items failed";
        } catch (const Error& e) {
          cell.ok = false;
          cell.error = e.what();
          cell.source = "failed";
        }
        grid.set(backend_entry.model_id, method, dataset_entry.name, std::move(cell));
      }
    }
  }
  json artifact = {{"provenance", provenance(config)}, {"grid", grid.to_json()}};
  write_json_artifact(out_dir, "grid.json", artifact);
  json summary = {{"provenance", provenance(config)},
                  {"cells", grid.size()},
                  {"models", grid.models()},
                  {"benchmarks", grid.benchmarks()}};
  if (!out_dir.empty()) summary["artifact"] = artifact_path(out_dir, "grid.json");
  return summary;
}

namespace {

ResultGrid load_grid_source(const std::string& source) {
  if (source.size() >= 4 && source.substr(source.size() - 4) == ".csv") {
    return ResultGrid::from_fixture_csv(source);
  }
  json doc;
  try {
    doc = json::parse(read_file(source));
  } catch (const json::exception& e) {
    throw ParseError(source + ": malformed grid JSON: " + e.what());
  }
  return ResultGrid::from_json(doc.contains("grid") ? doc["grid"] : doc);
}

}  // namespace

json op_leaderboard(const std::string& source, const std::string& out_dir) {
  const ResultGrid grid = load_grid_source(source);
  json report = leaderboard_report(grid);
  report["source"] = source;
  write_json_artifact(out_dir, "leaderboard_report.json", report);
  write_artifact(out_dir, "leaderboard_heatmap.svg", svg_delta_heatmap(grid));
  return report;
}

json op_cost_report(const EngineConfig& config, const std::string& backend_id,
                    const std::string& dataset_name, const std::string& out_dir) {
  const BackendEntry& backend_entry = find_backend(config, backend_id);
  const DatasetEntry& dataset_entry = find_dataset(config, dataset_name);
  const Dataset dataset =
      load_dataset(dataset_entry.path, dataset_entry.config, dataset_entry.name);
  auto backend = make_backend(backend_entry);
  const GenConfig gen = gen_for(config, backend_entry);

  const Program baseline =
      init_from_baseline(dataset_entry.baseline_instruction, Method::HelmBaseline);
  const Program seed_cot =
      init_from_baseline(dataset_entry.baseline_instruction, Method::ZeroShotCot);
  const auto pools = bootstrap_pools(seed_cot, *backend, dataset.train(), config.bfrs.tau,
                                     gen);

  const auto demos_for = [&](int k) {
    std::vector<Demonstration> demos;
    for (int i = 0; i < k && i < static_cast<int>(pools[0].demos.size()); ++i) {
      demos.push_back(pools[0].demos[static_cast<size_t>(i)]);
    }
    return demos;
  };

  std::vector<Program> programs;
  for (Method method : {Method::HelmBaseline, Method::ZeroShotPredict, Method::ZeroShotCot,
                        Method::Bfrs, Method::MiproV2}) {
    Program program = init_from_baseline(dataset_entry.baseline_instruction, method);
    if (method == Method::Bfrs || method == Method::MiproV2) {
      program.assignment.demos[0] = demos_for(config.bfrs.k);
      if (method == Method::MiproV2 && !config.instruction_candidates.empty()) {
        program.assignment.instructions[0] = config.instruction_candidates.front();
      }
    }
    programs.push_back(std::move(program));
  }

  const SplitView test = dataset.test();
  const size_t n_samples = std::min<size_t>(8, test.items.size());
  std::vector<const Example*> samples(test.items.begin(),
                                      test.items.begin() + static_cast<long>(n_samples));
  if (samples.empty()) throw ConfigError("cost report needs a nonempty test split");

  EvalOptions opts;
  opts.parallelism = config.parallelism;
  opts.gen = gen;

  json rows = json::array();
  std::vector<ScatterPoint> points;
  std::string csv = "method,additional_prompt_tokens,macro_accuracy\n";
  for (const auto& program : programs) {
    CostRecord record = prompt_overhead(program, baseline, samples);
    record.macro_accuracy =
        evaluate_full(program, *backend, test, opts).aggregate * 100.0;
    rows.push_back({{"method", method_name(record.method)},
                    {"additional_prompt_tokens", record.mean_additional_prompt_tokens},
                    {"macro_accuracy", record.macro_accuracy}});
    points.push_back({record.mean_additional_prompt_tokens, record.macro_accuracy,
                      method_name(record.method)});
    csv += std::string(method_name(record.method)) + "," +
           std::to_string(record.mean_additional_prompt_tokens) + "," +
           std::to_string(record.macro_accuracy) + "\n";
  }

  json report = {{"provenance", provenance(config)},
                 {"backend", backend_id},
                 {"dataset", dataset_name},
                 {"tokenizer", "approx_bytes_over_4"},
                 {"rows", rows}};
  write_json_artifact(out_dir, "cost_report.json", report);
  write_artifact(out_dir, "cost_report.csv", csv);
  write_artifact(out_dir, "cost_scatter.svg",
                 svg_scatter(points, "additional prompt tokens vs baseline",
                             "accuracy (%)", "Accuracy vs prompt-token cost"));
  return report;
}

json op_ingest_fixtures(const std::string& csv_path, const std::string& out_dir) {
  const ResultGrid grid = ResultGrid::from_fixture_csv(csv_path);
  json artifact = {{"source", csv_path}, {"grid", grid.to_json()}};
  write_json_artifact(out_dir, "grid.json", artifact);
  json summary = {{"source", csv_path},
                  {"cells", grid.size()},
                  {"models", grid.models()},
                  {"benchmarks", grid.benchmarks()}};
  if (!out_dir.empty()) summary["artifact"] = artifact_path(out_dir, "grid.json");
  return summary;
}

json op_stability_demo() { return demo_report(); }

json op_stability_scenario(const std::string& scenario_path, const std::string& out_dir) {
  const StabilityScenario scenario = load_scenario(scenario_path);
  json report = run_scenario(scenario);
  report["source"] = scenario_path;
  write_json_artifact(out_dir, "stability_report.json", report);
  return report;
}

json op_stability_sweep(int n, uint64_t seed, const std::string& out_dir) {
  const auto rows = run_sweep(n, seed);
  json summary = sweep_summary(rows);
  summary["seed"] = seed;
  write_json_artifact(out_dir, "stability_sweep.json", summary);
  write_artifact(out_dir, "stability_sweep.csv", sweep_csv(rows));
  std::vector<ScatterPoint> points;
  for (const auto& row : rows) {
    points.push_back({row.tv_y, row.argmax_equal ? 1.0 : 0.0, ""});
  }
  write_artifact(out_dir, "stability_flips.svg",
                 svg_scatter(points, "TV distance between answer distributions",
                             "argmax preserved (1) / flipped (0)",
                             "Prediction flips vs answer-distribution shift"));
  return summary;
}

}  // namespace plab
