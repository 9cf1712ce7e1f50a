#include <cmath>

#include "promptlab/backend.hpp"
#include "promptlab/error.hpp"
#include "promptlab/util.hpp"

namespace plab {

int64_t approx_token_count(std::string_view text) {
  if (text.empty()) return 0;
  return static_cast<int64_t>((text.size() + 3) / 4);
}

Tokenizer default_tokenizer() {
  return [](std::string_view text) { return approx_token_count(text); };
}

// ---------------------------------------------------------------------------
// SimulatedBackend
// ---------------------------------------------------------------------------

SimulatedBackend::SimulatedBackend(SimulatedLmSpec spec, std::string model_id)
    : spec_(std::move(spec)), model_id_(std::move(model_id)) {}

double SimulatedBackend::effective_accuracy(const CallContext& ctx) const {
  double q = spec_.base_accuracy;
  if (method_uses_cot(ctx.method)) q += spec_.cot_bonus;
  q += spec_.per_demo_bonus * ctx.demo_count;
  for (const auto& instruction : ctx.instructions) {
    const auto it = spec_.instruction_bonuses.find(instruction);
    if (it != spec_.instruction_bonuses.end()) q += it->second;
  }
  return std::clamp(q, 0.0, 1.0);
}

bool SimulatedBackend::deterministic_correct(const CallContext& ctx) const {
  uint64_t h = fnv1a64_u64(spec_.global_seed);
  h = fnv1a64(ctx.item_id, h);
  h = fnv1a64("\x1f", h);
  h = fnv1a64(ctx.canonical_assignment, h);
  const double q = effective_accuracy(ctx);
  const auto threshold = static_cast<uint64_t>(std::floor(q * 1e6 + 1e-6));
  return h % 1000000ull < threshold;
}

Completion SimulatedBackend::complete(const std::string& prompt, const GenConfig& /*cfg*/,
                                      const CallContext& ctx) {
  const bool correct = deterministic_correct(ctx);
  // The wrong answer never normalizes back to the target (targets are
  // nonempty by dataset invariant).
  const std::string answer = correct ? ctx.target : "WRONG_" + ctx.target;
  std::string text;
  if (method_uses_cot(ctx.method)) {
    text = std::string(kReasoningField) + ": Deterministic trace for item " + ctx.item_id +
           ".\n" + kOutputField + ": " + answer;
  } else {
    text = answer;
  }
  return {text, tokenizer_(prompt), tokenizer_(text)};
}

// ---------------------------------------------------------------------------
// ScriptedBackend
// ---------------------------------------------------------------------------

ScriptedBackend::ScriptedBackend(std::vector<std::string> responses, bool cycle,
                                 std::string model_id)
    : responses_(std::move(responses)), cycle_(cycle), model_id_(std::move(model_id)) {}

Completion ScriptedBackend::complete(const std::string& prompt, const GenConfig& /*cfg*/,
                                     const CallContext& /*ctx*/) {
  if (fail_next_.load() > 0) {
    fail_next_.fetch_sub(1);
    throw BackendError("scripted failure injected", 500);
  }
  const int call = calls_.fetch_add(1);
  if (responses_.empty()) throw BackendError("scripted backend has no responses");
  size_t index = static_cast<size_t>(call);
  if (index >= responses_.size()) {
    if (!cycle_) throw UnavailableError("scripted backend exhausted after " +
                                        std::to_string(responses_.size()) + " responses");
    index %= responses_.size();
  }
  const std::string& text = responses_[index];
  return {text, tokenizer_(prompt), tokenizer_(text)};
}

// ---------------------------------------------------------------------------
// TemplateProposerBackend
// ---------------------------------------------------------------------------

TemplateProposerBackend::TemplateProposerBackend(std::string task_name)
    : task_name_(std::move(task_name)) {}

Completion TemplateProposerBackend::complete(const std::string& prompt,
                                             const GenConfig& /*cfg*/,
                                             const CallContext& /*ctx*/) {
  const int call = calls_.fetch_add(1);
  const std::string text = "Work through the " + task_name_ +
                           " input step by step and state the final OUTPUT precisely. "
                           "(proposal " + std::to_string(call + 1) + ")";
  return {text, tokenizer_(prompt), tokenizer_(text)};
}

}  // namespace plab
