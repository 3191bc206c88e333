#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "nsa/prompt.hpp"

namespace nsa {

struct ProviderConfig {
    std::string name;          // unique roster label; used as the record "model"
    std::string base_url;      // chat-completion endpoint root, e.g. https://host/v1
    std::string model_id;      // provider-side model identifier
    std::string auth_env_var;  // empty = no auth; default NSA_KEY_<NAME>
    std::string category;      // free-form grouping label (e.g. US, CN, OSS)
    int max_concurrent = 4;
    int requests_per_minute = 600;
    double timeout_seconds = 60.0;
    int max_retries = 3;
    int retry_base_ms = 250;  // exponential backoff base
};

struct SamplingConfig {
    double temperature = 0.7;
    int samples_per_cell = 30;
    std::uint64_t seed = 0;
};

enum class TransportStatus { ok, retried_ok, failed };

std::string_view transport_status_name(TransportStatus s);
TransportStatus transport_status_from_name(std::string_view name);

struct CompletionResult {
    std::uint64_t prompt_hash = 0;
    std::string model;
    int sample_index = 0;
    std::string raw_text;
    std::int64_t latency_ms = 0;
    TransportStatus transport_status = TransportStatus::ok;
    std::string error;  // description when failed
};

class Provider {
public:
    virtual ~Provider() = default;
    virtual const ProviderConfig& config() const = 0;

    // One raw completion. Retries transport faults with exponential backoff
    // up to max_retries; model-side refusals are ordinary raw text, never an
    // error. Throws TransportError / AuthError / RateLimitExceeded only after
    // retries are exhausted.
    virtual CompletionResult complete(const PromptInstance& prompt, int sample_index,
                                      const SamplingConfig& sampling) = 0;

    // True when reruns with the same seed produce byte-identical output
    // (scripted providers). Run records then carry fixed timestamps so run
    // directories diff clean.
    virtual bool deterministic_transport() const { return false; }
};

// Chat-completion HTTP client (single request shape: model id, message list,
// temperature, max tokens). Auth token read from config.auth_env_var.
std::unique_ptr<Provider> make_http_provider(const ProviderConfig& config);

}  // namespace nsa
