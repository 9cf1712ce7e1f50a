#pragma once

#include <map>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "promptlab/backend.hpp"
#include "promptlab/dataset.hpp"
#include "promptlab/program.hpp"
#include "promptlab/rng.hpp"

namespace plab {

struct EvalOptions {
  int parallelism = 8;
  double ci_level = 0.95;
  int ci_resamples = 1000;
  uint64_t ci_seed = 0;
  double invalid_fraction = 0.2;  // more than this share of failed items voids the run
  GenConfig gen;
};

struct ItemScore {
  std::string example_id;
  double score = 0.0;
  bool failed = false;  // backend failure or unusable completion, scored 0
};

struct EvalReport {
  std::vector<ItemScore> per_item;
  double aggregate = 0.0;  // J: arithmetic mean of per-item scores
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  int n = 0;
  int failed_items = 0;
  bool valid = true;
};

// Render -> complete -> parse -> score for every item in the split; per-item
// fan-out is bounded by opts.parallelism and the aggregate is completion-order
// independent. Empty splits raise InvalidArgument.
EvalReport evaluate_full(const Program& program, Backend& backend, const SplitView& split,
                         const EvalOptions& opts = {});

// Mean metric over a seeded without-replacement draw of B items.
double minibatch_estimate(const Program& program, Backend& backend, const SplitView& split,
                          int minibatch_size, Rng& rng, const GenConfig& gen = {});

// Percentile bootstrap interval for the mean of `scores`.
std::pair<double, double> bootstrap_ci(std::span<const double> scores, double level,
                                       int resamples, uint64_t seed);

struct CostRecord {
  Method method = Method::HelmBaseline;
  double mean_additional_prompt_tokens = 0.0;
  double macro_accuracy = 0.0;  // filled by the report builder, not by prompt_overhead
};

// Mean over items of token(render(program)) - token(render(baseline)).
CostRecord prompt_overhead(const Program& program, const Program& baseline_program,
                           std::span<const Example* const> sample_items,
                           const Tokenizer& tokenizer = default_tokenizer());

// Single completion scored against the item; failures surface as exceptions.
double score_item(const Program& program, Backend& backend, const Example& example,
                  Metric metric, double rel_tol, const GenConfig& gen);

// ---------------------------------------------------------------------------
// ResultGrid: scores (in percent) indexed by (model, method, benchmark).
// The substrate for every leaderboard statistic; also the fixture container.
// ---------------------------------------------------------------------------
struct GridCell {
  double score_percent = 0.0;
  double ci_halfwidth = 0.0;
  int n = 0;
  std::string source;  // e.g. "computed", "helm_leaderboard", "reproduced"
  bool ok = true;
  std::string error;
};

class ResultGrid {
 public:
  void set(const std::string& model, Method method, const std::string& benchmark,
           GridCell cell);
  const GridCell* find(const std::string& model, Method method,
                       const std::string& benchmark) const;
  // Throws InvalidArgument naming the missing cell.
  const GridCell& at(const std::string& model, Method method,
                     const std::string& benchmark) const;

  std::vector<std::string> models() const;
  std::vector<std::string> benchmarks() const;
  std::vector<Method> methods() const;
  size_t size() const { return cells_.size(); }

  nlohmann::json to_json() const;
  static ResultGrid from_json(const nlohmann::json& j);
  // CSV columns: model_id,method,benchmark,score,ci_halfwidth,source_tag
  static ResultGrid from_fixture_csv(const std::string& path);

 private:
  // key: (model, benchmark, method name) -> deterministic iteration order
  std::map<std::tuple<std::string, std::string, std::string>, GridCell> cells_;
};

}  // namespace plab
