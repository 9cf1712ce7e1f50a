#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "promptlab/program.hpp"
#include "promptlab/rng.hpp"

namespace plab {

struct GenConfig {
  double temperature = 0.0;    // 0 for all reproducibility runs
  int max_output_tokens = 200; // matches the <200-token output cap
  std::string model_id;
};

struct Completion {
  std::string text;
  int64_t prompt_tokens = 0;
  int64_t output_tokens = 0;
};

// Side-channel metadata travelling with one completion request. The HTTP
// backend ignores it; synthetic backends (simulated LM, scripted proposer)
// key their behaviour on it instead of reading the prompt text.
struct CallContext {
  std::string item_id;
  std::string target;
  std::string canonical_assignment;
  Method method = Method::HelmBaseline;
  int demo_count = 0;
  std::vector<std::string> instructions;
};

class Backend {
 public:
  virtual ~Backend() = default;
  // Must be safe to call from multiple threads concurrently.
  virtual Completion complete(const std::string& prompt, const GenConfig& cfg,
                              const CallContext& ctx) = 0;
  virtual std::string id() const = 0;
};

using Tokenizer = std::function<int64_t(std::string_view)>;

// Default approximate tokenizer: ceil(bytes / 4). Exact tokenizers can be
// plugged in; all cost analysis built on this one is ordinal, not absolute.
int64_t approx_token_count(std::string_view text);
Tokenizer default_tokenizer();

// ---------------------------------------------------------------------------
// Simulated LM: a verification oracle whose per-item correctness is a pure,
// enumerable predicate of (spec, item id, assignment, method). Effective
// accuracy q(v) = clamp(a0 + cot_bonus*[CoT] + per_demo_bonus*#demos +
// instruction bonus, 0, 1); item x is answered correctly iff
// hash(seed, item_id, canonical(v)) mod 1e6 < floor(1e6 * q(v)).
// ---------------------------------------------------------------------------
struct SimulatedLmSpec {
  double base_accuracy = 0.5;
  double cot_bonus = 0.0;
  double per_demo_bonus = 0.0;
  std::map<std::string, double> instruction_bonuses;  // keyed by instruction text
  uint64_t global_seed = 0;
};

class SimulatedBackend : public Backend {
 public:
  explicit SimulatedBackend(SimulatedLmSpec spec, std::string model_id = "simulated");

  Completion complete(const std::string& prompt, const GenConfig& cfg,
                      const CallContext& ctx) override;
  std::string id() const override { return model_id_; }

  double effective_accuracy(const CallContext& ctx) const;     // q(v)
  bool deterministic_correct(const CallContext& ctx) const;    // the hash predicate
  const SimulatedLmSpec& spec() const { return spec_; }

 private:
  SimulatedLmSpec spec_;
  std::string model_id_;
  Tokenizer tokenizer_ = default_tokenizer();
};

// ---------------------------------------------------------------------------
// Scripted backend: replays a fixed response list (cycling by default).
// Doubles as a deterministic proposer LM and as a failure injector in tests.
// ---------------------------------------------------------------------------
class ScriptedBackend : public Backend {
 public:
  explicit ScriptedBackend(std::vector<std::string> responses, bool cycle = true,
                           std::string model_id = "scripted");

  Completion complete(const std::string& prompt, const GenConfig& cfg,
                      const CallContext& ctx) override;
  std::string id() const override { return model_id_; }

  int calls() const { return calls_.load(); }
  void fail_next(int n) { fail_next_.store(n); }

 private:
  std::vector<std::string> responses_;
  bool cycle_;
  std::string model_id_;
  std::atomic<int> calls_{0};
  std::atomic<int> fail_next_{0};
  Tokenizer tokenizer_ = default_tokenizer();
};

// Deterministic instruction proposer used when no scripted candidate list is
// configured: emits distinct numbered instruction variants.
class TemplateProposerBackend : public Backend {
 public:
  explicit TemplateProposerBackend(std::string task_name = "task");
  Completion complete(const std::string& prompt, const GenConfig& cfg,
                      const CallContext& ctx) override;
  std::string id() const override { return "template-proposer"; }

 private:
  std::string task_name_;
  std::atomic<int> calls_{0};
  Tokenizer tokenizer_ = default_tokenizer();
};

// ---------------------------------------------------------------------------
// OpenAI-compatible chat-completions client. Retries timeouts/429/5xx with
// jittered exponential backoff; never rewrites the prompt (the message
// content sent is byte-identical to the rendered prompt).
// ---------------------------------------------------------------------------
struct HttpBackendConfig {
  std::string endpoint;                       // scheme://host[:port]
  std::string path = "/v1/chat/completions";
  std::string model_id;
  std::string api_key_env = "PLAB_API_KEY";
  double timeout_s = 30.0;
  int max_retries = 5;
  int base_delay_ms = 1000;  // doubled per attempt, +/-50% jitter
};

class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpBackendConfig cfg);

  Completion complete(const std::string& prompt, const GenConfig& cfg,
                      const CallContext& ctx) override;
  std::string id() const override { return cfg_.model_id; }

  const HttpBackendConfig& config() const { return cfg_; }

 private:
  int64_t backoff_ms(int attempt);

  HttpBackendConfig cfg_;
  Tokenizer tokenizer_ = default_tokenizer();
  std::mutex rng_mutex_;
  Rng jitter_rng_{0x6a0dad};  // timing only; results never depend on it
};

}  // namespace plab
