#pragma once

#include <string>
#include <utility>
#include <vector>

#include "promptlab/bfrs.hpp"

namespace plab {

// Finite categorical search space: per module, a list of instruction
// candidates (index 0 = seed) and a list of pre-sampled K-demo sets
// (index 0 = empty set). Pre-sampling keeps the TPE space categorical.
struct CandidateSpace {
  std::vector<std::vector<std::string>> instructions;
  std::vector<std::vector<std::vector<Demonstration>>> demo_sets;

  size_t num_modules() const { return instructions.size(); }
  // Product over all slots, saturating at SIZE_MAX.
  size_t total_points() const;
  // Slot layout: [instr_0, demos_0, instr_1, demos_1, ...]
  std::vector<size_t> slot_sizes() const;
};

struct SlotIndices {
  std::vector<int> instruction_idx;  // per module
  std::vector<int> demo_set_idx;     // per module
  bool operator==(const SlotIndices&) const = default;
};

// Grounding context for the proposer LM.
struct ProposalContext {
  std::string task_name;
  std::string program_description;
  std::vector<std::string> sample_inputs;                       // first N train inputs
  std::vector<std::pair<std::string, int>> label_histogram;     // target -> count
  std::vector<Demonstration> exemplar_demos;
  std::vector<std::pair<std::string, double>> trial_history_tail;  // (summary, score)
};

std::string render_proposer_prompt(const ProposalContext& ctx, int proposal_index);

struct ProposalResult {
  std::vector<std::string> instructions;  // [0] is always the seed instruction
  bool used_fallback = false;             // proposer failed; seed-only list
};

// n_candidates distinct proposer instructions plus the seed at index 0.
// Duplicates are resampled up to retry_cap extra calls, then padded with
// numbered seed variants. Backend failure degrades to the seed-only list.
ProposalResult propose_instructions(Backend& proposer, const GenConfig& gen,
                                    const ProposalContext& ctx,
                                    const std::string& seed_instruction, int n_candidates,
                                    int retry_cap = 3);

// Per-slot categorical densities with add-one smoothing. `good` covers the
// top-gamma trials by score (ties broken by trial index), `bad` the rest;
// acquisition maximizes good/bad, the standard TPE orientation.
struct TpeModel {
  double gamma = 0.2;
  bool uniform = true;  // empty history: acquisition is a seeded uniform draw
  size_t good_count = 0;
  std::vector<std::vector<double>> good;
  std::vector<std::vector<double>> bad;
};

TpeModel tpe_fit(const std::vector<TrialRecord>& history, double gamma,
                 const std::vector<size_t>& slot_sizes);

// Exact argmax of the per-slot density ratio when the space has at most
// `enumeration_limit` points (ties -> lowest lexicographic index); otherwise
// the best of `sample_count` seeded draws from the good density.
SlotIndices tpe_acquire(const TpeModel& model, const CandidateSpace& space, Rng& rng,
                        size_t enumeration_limit = 1000000, int sample_count = 256);

struct MiproParams {
  int trials = 30;            // T
  int minibatch = 8;          // B
  int escalation_period = 5;  // E
  int top_k_escalate = 2;
  double gamma = 0.2;
  int n_instruction_candidates = 3;
  int n_demoset_candidates = 4;
  int k = kDemoCap;  // demos per sampled set
  double tau = 1.0;
  uint64_t rng_seed = 0;
  int parallelism = 8;
};

CandidateSpace build_candidate_space(const Program& seed_program,
                                     const std::vector<DemoPool>& pools,
                                     const std::vector<std::string>& instruction_candidates,
                                     const MiproParams& params);

Program apply_candidate(const Program& seed_program, const CandidateSpace& space,
                        const SlotIndices& indices);

// Algorithm: bootstrap demos, propose instructions, then T TPE-guided trials
// scored on fresh seeded minibatches; every E trials the top candidates by
// running mean are escalated to a full-val evaluation and the incumbent
// updated on strict improvement. A final escalation pass runs after the loop.
OptimizationResult mipro_optimize(const Program& seed_program, Backend& backend,
                                  Backend& proposer, const SplitView& train,
                                  const SplitView& val, const MiproParams& params,
                                  const GenConfig& gen = {});

}  // namespace plab
