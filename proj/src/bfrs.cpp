#include "promptlab/bfrs.hpp"

#include <cmath>

#include "promptlab/error.hpp"

namespace plab {

namespace {

void require_optimizer_split(const SplitView& split, const char* role, SplitTag expected) {
  if (split.tag == SplitTag::Test) {
    throw InvalidArgument(std::string("optimizers must not touch the test split (") + role +
                          ")");
  }
  if (split.tag != expected) {
    throw InvalidArgument(std::string(role) + " split expected, got " +
                          split_name(split.tag));
  }
}

}  // namespace

std::vector<DemoPool> bootstrap_pools(const Program& seed_program, Backend& backend,
                                      const SplitView& train, double tau,
                                      const GenConfig& gen) {
  require_optimizer_split(train, "train", SplitTag::Train);
  if (train.items.empty()) throw InvalidArgument("bootstrap_pools: empty train split");
  validate_program(seed_program);
  if (!method_uses_cot(seed_program.assignment.method)) {
    throw InvalidArgument("bootstrap requires a CoT-mode seed program");
  }
  for (const auto& demos : seed_program.assignment.demos) {
    if (!demos.empty()) throw InvalidArgument("seed program must be zero-shot");
  }

  const Metric metric = train.dataset->metric;
  const double rel_tol = train.dataset->rel_tol;
  const std::string canonical = canonical_assignment(seed_program.assignment);

  std::vector<DemoPool> pools(seed_program.modules.size());
  for (size_t m = 0; m < pools.size(); ++m) {
    pools[m].module_id = static_cast<int>(m);
    pools[m].tau = tau;
  }

  for (const Example* example : train.items) {
    const std::string prompt = render_prompt(seed_program, example->input);
    CallContext ctx;
    ctx.item_id = example->id;
    ctx.target = example->target;
    ctx.canonical_assignment = canonical;
    ctx.method = seed_program.assignment.method;
    ctx.instructions = seed_program.assignment.instructions;
    ParsedOutput parsed;
    try {
      const Completion completion = backend.complete(prompt, gen, ctx);
      parsed = parse_response(completion.text, seed_program.assignment.method);
    } catch (const ParseError&) {
      continue;  // failed completion never yields a demo
    }
    if (score(metric, parsed.output, *example, rel_tol) < tau) continue;
    for (auto& pool : pools) {
      Demonstration demo;
      demo.module_input = example->input;
      demo.reasoning = parsed.reasoning;
      demo.module_output = parsed.output;
      demo.source_example_id = example->id;
      pool.demos.push_back(std::move(demo));
    }
  }
  return pools;
}

std::vector<int> sample_k_indices(const DemoPool& pool, int k, Rng& rng) {
  if (k <= 0 || pool.demos.empty()) return {};
  const auto take = std::min<size_t>(static_cast<size_t>(k), pool.demos.size());
  std::vector<int> out;
  out.reserve(take);
  for (size_t i : rng.sample_without_replacement(pool.demos.size(), take)) {
    out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<Demonstration> sample_k(const DemoPool& pool, int k, Rng& rng) {
  std::vector<Demonstration> out;
  for (int i : sample_k_indices(pool, k, rng)) {
    out.push_back(pool.demos[static_cast<size_t>(i)]);
  }
  return out;
}

OptimizationResult bfrs_optimize(const Program& seed_program, Backend& backend,
                                 const SplitView& train, const SplitView& val,
                                 const BfrsParams& params, const GenConfig& gen) {
  if (val.items.empty()) throw InvalidArgument("bfrs_optimize: empty val split");
  require_optimizer_split(val, "val", SplitTag::Val);
  if (params.trials < 1) throw InvalidArgument("bfrs_optimize: trials must be >= 1");
  if (params.minibatch < 1 || static_cast<size_t>(params.minibatch) > val.items.size()) {
    throw InvalidArgument("bfrs_optimize: minibatch out of range");
  }
  if (params.k < 0 || params.k > kDemoCap) {
    throw InvalidArgument("bfrs_optimize: k outside [0, " + std::to_string(kDemoCap) + "]");
  }

  const auto pools = bootstrap_pools(seed_program, backend, train, params.tau, gen);
  const size_t modules = seed_program.modules.size();

  EvalOptions eval_opts;
  eval_opts.parallelism = params.parallelism;
  eval_opts.gen = gen;

  OptimizationResult result;
  bool any_demos = false;
  for (const auto& pool : pools) any_demos |= !pool.demos.empty();
  if (!any_demos) {
    // Rejection sampling accepted nothing: fall back to the zero-shot CoT
    // assignment rather than failing the run.
    result.best_assignment = seed_program.assignment;
    result.empty_pool_fallback = true;
    Program fallback = seed_program;
    result.full_val_score = evaluate_full(fallback, backend, val, eval_opts).aggregate;
    result.best_score = result.full_val_score;
    return result;
  }

  double best = -1.0;
  int best_trial = -1;
  std::vector<std::vector<int>> best_indices;
  for (int r = 1; r <= params.trials; ++r) {
    Rng rng(derive_seed(params.rng_seed, "bfrs_trial", static_cast<uint64_t>(r)));
    Program candidate = seed_program;
    TrialRecord record;
    record.trial_index = r;
    record.instruction_idx.assign(modules, 0);
    record.demo_set_idx.assign(modules, -1);
    for (size_t m = 0; m < modules; ++m) {
      auto drawn = sample_k_indices(pools[m], params.k, rng);
      candidate.assignment.demos[m].clear();
      for (int idx : drawn) {
        candidate.assignment.demos[m].push_back(pools[m].demos[static_cast<size_t>(idx)]);
      }
      record.demo_pool_idx.push_back(std::move(drawn));
    }
    record.score = minibatch_estimate(candidate, backend, val, params.minibatch, rng, gen);
    if (record.score > best) {
      best = record.score;
      best_trial = r;
      best_indices = record.demo_pool_idx;
    }
    result.trials.push_back(std::move(record));
  }

  Program winner = seed_program;
  for (size_t m = 0; m < modules; ++m) {
    winner.assignment.demos[m].clear();
    for (int idx : best_indices[m]) {
      winner.assignment.demos[m].push_back(pools[m].demos[static_cast<size_t>(idx)]);
    }
  }
  result.best_assignment = winner.assignment;
  result.best_trial_index = best_trial;
  result.best_score = best;
  if (params.full_reeval) {
    result.full_val_score = evaluate_full(winner, backend, val, eval_opts).aggregate;
    result.best_score = result.full_val_score;
  }
  return result;
}

double hoeffding_bound(int minibatch_size, double delta) {
  if (minibatch_size < 1) throw InvalidArgument("hoeffding_bound: B must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) {
    throw InvalidArgument("hoeffding_bound: delta outside (0, 1)");
  }
  return std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(minibatch_size)));
}

}  // namespace plab
