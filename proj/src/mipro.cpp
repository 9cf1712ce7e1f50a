#include "promptlab/mipro.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "promptlab/error.hpp"
#include "promptlab/util.hpp"

namespace plab {

size_t CandidateSpace::total_points() const {
  size_t total = 1;
  for (size_t size : slot_sizes()) {
    if (size == 0) return 0;
    if (total > SIZE_MAX / size) return SIZE_MAX;
    total *= size;
  }
  return total;
}

std::vector<size_t> CandidateSpace::slot_sizes() const {
  std::vector<size_t> sizes;
  for (size_t m = 0; m < instructions.size(); ++m) {
    sizes.push_back(instructions[m].size());
    sizes.push_back(demo_sets[m].size());
  }
  return sizes;
}

std::string render_proposer_prompt(const ProposalContext& ctx, int proposal_index) {
  std::string s;
  s += "You are proposing an instruction for a language-model program.\n\n";
  s += "Task: " + ctx.task_name + "\n";
  s += "Program: " + ctx.program_description + "\n\n";
  if (!ctx.sample_inputs.empty()) {
    s += "Dataset sample inputs:\n";
    for (const auto& input : ctx.sample_inputs) s += "- " + input + "\n";
  }
  if (!ctx.label_histogram.empty()) {
    s += "Label histogram:\n";
    for (const auto& [label, count] : ctx.label_histogram) {
      s += "- " + label + ": " + std::to_string(count) + "\n";
    }
  }
  if (!ctx.exemplar_demos.empty()) {
    s += "Exemplar demonstrations:\n";
    for (const auto& demo : ctx.exemplar_demos) {
      s += "- INPUT: " + demo.module_input + " -> OUTPUT: " + demo.module_output + "\n";
    }
  }
  if (!ctx.trial_history_tail.empty()) {
    s += "Recent trials:\n";
    for (const auto& [summary, score] : ctx.trial_history_tail) {
      s += "- " + summary + " scored " + std::to_string(score) + "\n";
    }
  }
  s += "\nWrite one improved instruction (proposal " + std::to_string(proposal_index) + ").";
  return s;
}

ProposalResult propose_instructions(Backend& proposer, const GenConfig& gen,
                                    const ProposalContext& ctx,
                                    const std::string& seed_instruction, int n_candidates,
                                    int retry_cap) {
  ProposalResult result;
  result.instructions.push_back(seed_instruction);
  if (n_candidates <= 0) return result;

  std::set<std::string> seen{seed_instruction};
  const int attempt_budget = n_candidates + std::max(0, retry_cap);
  int attempts = 0;
  try {
    while (static_cast<int>(result.instructions.size()) - 1 < n_candidates &&
           attempts < attempt_budget) {
      ++attempts;
      const std::string prompt = render_proposer_prompt(ctx, attempts);
      CallContext call;
      call.item_id = "proposal:" + std::to_string(attempts);
      const Completion completion = proposer.complete(prompt, gen, call);
      const std::string candidate = trim(completion.text);
      if (candidate.empty() || !seen.insert(candidate).second) continue;
      result.instructions.push_back(candidate);
    }
  } catch (const Error&) {
    // Proposer unusable: degrade to the seed-only candidate list.
    result.instructions.assign(1, seed_instruction);
    result.used_fallback = true;
    return result;
  }
  int variant = 1;
  while (static_cast<int>(result.instructions.size()) - 1 < n_candidates) {
    const std::string padded = seed_instruction + " (variant " + std::to_string(variant++) + ")";
    if (seen.insert(padded).second) result.instructions.push_back(padded);
  }
  return result;
}

TpeModel tpe_fit(const std::vector<TrialRecord>& history, double gamma,
                 const std::vector<size_t>& slot_sizes) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidArgument("tpe_fit: gamma outside (0, 1)");
  TpeModel model;
  model.gamma = gamma;
  model.good.resize(slot_sizes.size());
  model.bad.resize(slot_sizes.size());
  if (history.empty()) {
    for (size_t s = 0; s < slot_sizes.size(); ++s) {
      model.good[s].assign(slot_sizes[s], 1.0 / static_cast<double>(slot_sizes[s]));
      model.bad[s] = model.good[s];
    }
    return model;
  }
  model.uniform = false;

  std::vector<size_t> order(history.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (history[a].score != history[b].score) return history[a].score > history[b].score;
    return history[a].trial_index < history[b].trial_index;
  });
  const size_t n_good = std::max<size_t>(
      1, static_cast<size_t>(std::ceil(gamma * static_cast<double>(history.size()))));
  model.good_count = n_good;

  const auto slot_value = [&](const TrialRecord& record, size_t slot) -> size_t {
    const size_t module = slot / 2;
    const int v = (slot % 2 == 0) ? record.instruction_idx[module]
                                  : record.demo_set_idx[module];
    return static_cast<size_t>(v);
  };

  for (size_t s = 0; s < slot_sizes.size(); ++s) {
    std::vector<double> good_counts(slot_sizes[s], 0.0);
    std::vector<double> bad_counts(slot_sizes[s], 0.0);
    for (size_t rank = 0; rank < order.size(); ++rank) {
      auto& counts = rank < n_good ? good_counts : bad_counts;
      counts[slot_value(history[order[rank]], s)] += 1.0;
    }
    const double good_total = static_cast<double>(n_good + slot_sizes[s]);
    const double bad_total =
        static_cast<double>(history.size() - n_good + slot_sizes[s]);
    model.good[s].resize(slot_sizes[s]);
    model.bad[s].resize(slot_sizes[s]);
    for (size_t v = 0; v < slot_sizes[s]; ++v) {
      model.good[s][v] = (good_counts[v] + 1.0) / good_total;  // add-one smoothing
      model.bad[s][v] = (bad_counts[v] + 1.0) / bad_total;
    }
  }
  return model;
}

namespace {

SlotIndices from_slot_values(const CandidateSpace& space, const std::vector<size_t>& values) {
  SlotIndices out;
  for (size_t m = 0; m < space.num_modules(); ++m) {
    out.instruction_idx.push_back(static_cast<int>(values[2 * m]));
    out.demo_set_idx.push_back(static_cast<int>(values[2 * m + 1]));
  }
  return out;
}

double log_ratio(const TpeModel& model, const std::vector<size_t>& values) {
  double sum = 0.0;
  for (size_t s = 0; s < values.size(); ++s) {
    sum += std::log(model.good[s][values[s]]) - std::log(model.bad[s][values[s]]);
  }
  return sum;
}

size_t sample_categorical(const std::vector<double>& probs, Rng& rng) {
  double u = rng.next_unit();
  for (size_t i = 0; i < probs.size(); ++i) {
    u -= probs[i];
    if (u < 0.0) return i;
  }
  return probs.size() - 1;
}

}  // namespace

SlotIndices tpe_acquire(const TpeModel& model, const CandidateSpace& space, Rng& rng,
                        size_t enumeration_limit, int sample_count) {
  const auto sizes = space.slot_sizes();
  for (size_t size : sizes) {
    if (size == 0) throw InvalidArgument("tpe_acquire: empty candidate slot");
  }
  if (model.uniform) {
    std::vector<size_t> values;
    for (size_t size : sizes) values.push_back(rng.next_below(size));
    return from_slot_values(space, values);
  }

  if (space.total_points() <= enumeration_limit) {
    // Lexicographic odometer walk; keeping the first maximum implements the
    // lowest-index tie rule.
    std::vector<size_t> values(sizes.size(), 0);
    std::vector<size_t> best = values;
    double best_score = log_ratio(model, values);
    const auto advance = [&]() -> bool {
      size_t slot = sizes.size();
      while (slot-- > 0) {
        if (++values[slot] < sizes[slot]) return true;
        values[slot] = 0;
      }
      return false;
    };
    while (advance()) {
      const double score = log_ratio(model, values);
      if (score > best_score) {
        best_score = score;
        best = values;
      }
    }
    return from_slot_values(space, best);
  }

  // Large space: best of sample_count draws from the good density.
  std::vector<size_t> best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < sample_count; ++c) {
    std::vector<size_t> values;
    values.reserve(sizes.size());
    for (size_t s = 0; s < sizes.size(); ++s) {
      values.push_back(sample_categorical(model.good[s], rng));
    }
    const double score = log_ratio(model, values);
    if (score > best_score || (score == best_score && values < best)) {
      best_score = score;
      best = values;
    }
  }
  return from_slot_values(space, best);
}

CandidateSpace build_candidate_space(const Program& seed_program,
                                     const std::vector<DemoPool>& pools,
                                     const std::vector<std::string>& instruction_candidates,
                                     const MiproParams& params) {
  CandidateSpace space;
  for (size_t m = 0; m < seed_program.modules.size(); ++m) {
    space.instructions.push_back(instruction_candidates);
    std::vector<std::vector<Demonstration>> sets;
    sets.emplace_back();  // the empty demo set is always candidate 0
    if (!pools[m].demos.empty() && params.k > 0) {
      std::set<std::vector<int>> seen;
      int draws = 0;
      const int budget = params.n_demoset_candidates * 8;
      while (static_cast<int>(sets.size()) - 1 < params.n_demoset_candidates &&
             draws < budget) {
        Rng rng(derive_seed(params.rng_seed, "mipro_demoset",
                            static_cast<uint64_t>(m * 1000 + draws)));
        ++draws;
        auto indices = sample_k_indices(pools[m], params.k, rng);
        auto sorted = indices;
        std::sort(sorted.begin(), sorted.end());
        if (!seen.insert(sorted).second) continue;
        std::vector<Demonstration> set;
        for (int idx : indices) set.push_back(pools[m].demos[static_cast<size_t>(idx)]);
        sets.push_back(std::move(set));
      }
    }
    space.demo_sets.push_back(std::move(sets));
  }
  return space;
}

Program apply_candidate(const Program& seed_program, const CandidateSpace& space,
                        const SlotIndices& indices) {
  Program program = seed_program;
  for (size_t m = 0; m < space.num_modules(); ++m) {
    program.assignment.instructions[m] =
        space.instructions[m][static_cast<size_t>(indices.instruction_idx[m])];
    program.assignment.demos[m] =
        space.demo_sets[m][static_cast<size_t>(indices.demo_set_idx[m])];
  }
  return program;
}

OptimizationResult mipro_optimize(const Program& seed_program, Backend& backend,
                                  Backend& proposer, const SplitView& train,
                                  const SplitView& val, const MiproParams& params,
                                  const GenConfig& gen) {
  if (val.items.empty()) throw InvalidArgument("mipro_optimize: empty val split");
  if (val.tag == SplitTag::Test || train.tag == SplitTag::Test) {
    throw InvalidArgument("optimizers must not touch the test split");
  }
  if (params.trials < 0) throw InvalidArgument("mipro_optimize: negative trial count");
  if (params.escalation_period < 1) {
    throw InvalidArgument("mipro_optimize: escalation period must be >= 1");
  }
  if (params.minibatch < 1 || static_cast<size_t>(params.minibatch) > val.items.size()) {
    throw InvalidArgument("mipro_optimize: minibatch out of range");
  }
  validate_program(seed_program);

  const auto pools = bootstrap_pools(seed_program, backend, train, params.tau, gen);

  ProposalContext ctx;
  ctx.task_name = train.dataset->name;
  ctx.program_description = "single-module program, objective: \"" +
                            seed_program.assignment.instructions[0] + "\"";
  const size_t n_samples = std::min<size_t>(3, train.items.size());
  for (size_t i = 0; i < n_samples; ++i) ctx.sample_inputs.push_back(train.items[i]->input);
  std::map<std::string, int> histogram;
  for (const Example* example : train.items) ++histogram[example->target];
  ctx.label_histogram.assign(histogram.begin(), histogram.end());
  for (size_t i = 0; i < std::min<size_t>(2, pools[0].demos.size()); ++i) {
    ctx.exemplar_demos.push_back(pools[0].demos[i]);
  }

  const auto proposal =
      propose_instructions(proposer, gen, ctx, seed_program.assignment.instructions[0],
                           params.n_instruction_candidates);
  const CandidateSpace space =
      build_candidate_space(seed_program, pools, proposal.instructions, params);
  const auto sizes = space.slot_sizes();

  EvalOptions eval_opts;
  eval_opts.parallelism = params.parallelism;
  eval_opts.gen = gen;

  const SlotIndices seed_indices{std::vector<int>(space.num_modules(), 0),
                                 std::vector<int>(space.num_modules(), 0)};

  // Incumbent starts at the seed with its true full-val score so that the
  // reported J is always a recomputable full-val value.
  std::map<std::vector<int>, double> full_eval_cache;
  const auto flat = [&](const SlotIndices& idx) {
    std::vector<int> key = idx.instruction_idx;
    key.insert(key.end(), idx.demo_set_idx.begin(), idx.demo_set_idx.end());
    return key;
  };
  const auto full_eval = [&](const SlotIndices& idx) {
    const auto key = flat(idx);
    const auto it = full_eval_cache.find(key);
    if (it != full_eval_cache.end()) return it->second;
    const Program program = apply_candidate(seed_program, space, idx);
    const double j = evaluate_full(program, backend, val, eval_opts).aggregate;
    full_eval_cache.emplace(key, j);
    return j;
  };

  SlotIndices incumbent = seed_indices;
  double incumbent_score = full_eval(seed_indices);

  OptimizationResult result;
  std::vector<TrialRecord> history;
  // (first trial index, sum, count, indices) per distinct candidate
  struct RunningStat {
    int first_trial;
    double sum = 0.0;
    int count = 0;
    SlotIndices indices;
  };
  std::map<std::vector<int>, RunningStat> running;

  const auto escalate = [&]() {
    std::vector<const RunningStat*> ranked;
    for (const auto& [key, stat] : running) ranked.push_back(&stat);
    std::sort(ranked.begin(), ranked.end(), [](const RunningStat* a, const RunningStat* b) {
      const double ma = a->sum / a->count, mb = b->sum / b->count;
      if (ma != mb) return ma > mb;
      return a->first_trial < b->first_trial;
    });
    const size_t take = std::min<size_t>(static_cast<size_t>(params.top_k_escalate),
                                         ranked.size());
    for (size_t i = 0; i < take; ++i) {
      const double j = full_eval(ranked[i]->indices);
      if (j > incumbent_score) {
        incumbent_score = j;
        incumbent = ranked[i]->indices;
      }
    }
  };

  for (int t = 1; t <= params.trials; ++t) {
    const TpeModel model = tpe_fit(history, params.gamma, sizes);
    Rng rng(derive_seed(params.rng_seed, "mipro_trial", static_cast<uint64_t>(t)));
    const SlotIndices chosen = tpe_acquire(model, space, rng);
    const Program candidate = apply_candidate(seed_program, space, chosen);
    const double y = minibatch_estimate(candidate, backend, val, params.minibatch, rng, gen);

    TrialRecord record;
    record.trial_index = t;
    record.score = y;
    record.instruction_idx = chosen.instruction_idx;
    record.demo_set_idx = chosen.demo_set_idx;
    history.push_back(record);

    auto [it, inserted] = running.try_emplace(flat(chosen), RunningStat{t, 0.0, 0, chosen});
    it->second.sum += y;
    it->second.count += 1;

    if (t % params.escalation_period == 0) escalate();
  }
  escalate();  // final pass

  result.best_assignment = apply_candidate(seed_program, space, incumbent).assignment;
  result.best_score = incumbent_score;
  result.full_val_score = incumbent_score;
  result.trials = std::move(history);
  bool any_demos = false;
  for (const auto& pool : pools) any_demos |= !pool.demos.empty();
  result.empty_pool_fallback = !any_demos;
  return result;
}

}  // namespace plab
