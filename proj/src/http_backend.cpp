#include <chrono>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "promptlab/backend.hpp"
#include "promptlab/error.hpp"

namespace plab {

using nlohmann::json;

HttpBackend::HttpBackend(HttpBackendConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.endpoint.empty()) throw ConfigError("http backend requires an endpoint");
  if (cfg_.max_retries < 1) throw ConfigError("max_retries must be >= 1");
}

int64_t HttpBackend::backoff_ms(int attempt) {
  // base * 2^(attempt-1), jittered by +/-50%.
  const double base = static_cast<double>(cfg_.base_delay_ms) * std::pow(2.0, attempt - 1);
  double unit;
  {
    std::lock_guard<std::mutex> lock(rng_mutex_);
    unit = jitter_rng_.next_unit();
  }
  return static_cast<int64_t>(base * (0.5 + unit));
}

Completion HttpBackend::complete(const std::string& prompt, const GenConfig& cfg,
                                 const CallContext& /*ctx*/) {
  json request = {
      {"model", cfg.model_id.empty() ? cfg_.model_id : cfg.model_id},
      {"temperature", cfg.temperature},
      {"max_tokens", cfg.max_output_tokens},
      // Whole prompt as a single user message; role splitting is left to the
      // serving side.
      {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
  };
  const std::string body = request.dump();

  httplib::Headers headers;
  if (const char* key = std::getenv(cfg_.api_key_env.c_str()); key && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  std::string last_failure = "no attempt made";
  for (int attempt = 1; attempt <= cfg_.max_retries; ++attempt) {
    if (attempt > 1) {
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms(attempt - 1)));
    }
    httplib::Client client(cfg_.endpoint);
    client.set_connection_timeout(std::chrono::duration<double>(cfg_.timeout_s));
    client.set_read_timeout(std::chrono::duration<double>(cfg_.timeout_s));
    client.set_write_timeout(std::chrono::duration<double>(cfg_.timeout_s));

    auto res = client.Post(cfg_.path, headers, body, "application/json");
    if (!res) {
      last_failure = "transport error: " + httplib::to_string(res.error());
      continue;  // timeouts and connection failures are retryable
    }
    if (res->status == 429 || res->status >= 500) {
      last_failure = "http " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw BackendError("http " + std::to_string(res->status) + ": " + res->body, res->status);
    }

    json parsed;
    try {
      parsed = json::parse(res->body);
    } catch (const json::exception& e) {
      throw ProtocolError(std::string("malformed completion JSON: ") + e.what());
    }
    if (!parsed.contains("choices") || !parsed["choices"].is_array() ||
        parsed["choices"].empty()) {
      throw ProtocolError("completion JSON missing choices");
    }
    const auto& choice = parsed["choices"][0];
    if (!choice.contains("message") || !choice["message"].contains("content")) {
      throw ProtocolError("completion JSON missing message content");
    }
    Completion completion;
    completion.text = choice["message"]["content"].get<std::string>();
    if (parsed.contains("usage") && parsed["usage"].is_object()) {
      completion.prompt_tokens = parsed["usage"].value("prompt_tokens", int64_t{0});
      completion.output_tokens = parsed["usage"].value("completion_tokens", int64_t{0});
    }
    if (completion.prompt_tokens == 0) completion.prompt_tokens = tokenizer_(prompt);
    if (completion.output_tokens == 0) completion.output_tokens = tokenizer_(completion.text);
    return completion;
  }
  throw UnavailableError("retry budget exhausted (" + std::to_string(cfg_.max_retries) +
                         " attempts), last failure: " + last_failure);
}

}  // namespace plab
