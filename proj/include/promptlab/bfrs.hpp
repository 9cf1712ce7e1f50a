#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "promptlab/backend.hpp"
#include "promptlab/dataset.hpp"
#include "promptlab/harness.hpp"
#include "promptlab/program.hpp"
#include "promptlab/rng.hpp"

namespace plab {

// Per-module pool of rejection-sampled demonstrations.
struct DemoPool {
  int module_id = 0;
  std::vector<Demonstration> demos;
  double tau = 1.0;
};

struct BfrsParams {
  int k = kDemoCap;       // demos per module
  int trials = 16;        // R
  int minibatch = 8;      // B
  double tau = 1.0;       // acceptance threshold; 1.0 suits binary metrics
  uint64_t rng_seed = 0;
  bool full_reeval = true;  // re-score the winner on full val
  int parallelism = 8;
};

// One optimizer trial. BFRS logs the drawn pool indices per module; MIPROv2
// logs (instruction index, demo-set index) into its candidate space.
struct TrialRecord {
  int trial_index = 0;
  double score = 0.0;  // minibatch estimate
  std::vector<int> instruction_idx;
  std::vector<int> demo_set_idx;
  std::vector<std::vector<int>> demo_pool_idx;
};

struct OptimizationResult {
  PromptAssignment best_assignment;
  double best_score = 0.0;
  std::vector<TrialRecord> trials;
  int best_trial_index = -1;
  bool empty_pool_fallback = false;
  double full_val_score = std::numeric_limits<double>::quiet_NaN();
};

// Rejection sampling over the train split with a CoT seed program: every
// accepted example contributes one demonstration per module carrying the
// observed reasoning trace. Pool order follows train order.
std::vector<DemoPool> bootstrap_pools(const Program& seed_program, Backend& backend,
                                      const SplitView& train, double tau,
                                      const GenConfig& gen = {});

// min(k, |pool|) distinct demos, uniform without replacement, in drawn order.
std::vector<Demonstration> sample_k(const DemoPool& pool, int k, Rng& rng);
std::vector<int> sample_k_indices(const DemoPool& pool, int k, Rng& rng);

// Algorithm: bootstrap pools, draw R random K-subsets per module with seed
// instructions fixed, score each on a fresh seeded minibatch of val, return
// the argmax (ties -> lowest trial index). Empty pools fall back to the
// zero-shot CoT assignment with a warning flag.
OptimizationResult bfrs_optimize(const Program& seed_program, Backend& backend,
                                 const SplitView& train, const SplitView& val,
                                 const BfrsParams& params, const GenConfig& gen = {});

// Hoeffding half-width sqrt(ln(2/delta) / (2B)): |J_B - J| <= bound with
// probability >= 1 - delta for metrics in [0, 1].
double hoeffding_bound(int minibatch_size, double delta);

}  // namespace plab
