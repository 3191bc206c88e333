#include "nsa/provider.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"
#include "json.hpp"

#include "nsa/errors.hpp"

namespace nsa {

using nlohmann::json;

std::string_view transport_status_name(TransportStatus s) {
    switch (s) {
        case TransportStatus::ok: return "ok";
        case TransportStatus::retried_ok: return "retried_ok";
        case TransportStatus::failed: return "failed";
    }
    return "?";
}

TransportStatus transport_status_from_name(std::string_view name) {
    if (name == "ok") return TransportStatus::ok;
    if (name == "retried_ok") return TransportStatus::retried_ok;
    if (name == "failed") return TransportStatus::failed;
    throw ParseError("unknown transport status: " + std::string(name));
}

namespace {

struct ParsedUrl {
    std::string origin;  // scheme://host[:port] for httplib::Client
    std::string path_prefix;
};

ParsedUrl parse_base_url(const std::string& url) {
    std::size_t scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw ValidationError("provider base_url must start with http:// or https://: " + url);
    std::size_t path_start = url.find('/', scheme_end + 3);
    ParsedUrl out;
    if (path_start == std::string::npos) {
        out.origin = url;
    } else {
        out.origin = url.substr(0, path_start);
        out.path_prefix = url.substr(path_start);
        while (!out.path_prefix.empty() && out.path_prefix.back() == '/')
            out.path_prefix.pop_back();
    }
    return out;
}

class HttpProvider final : public Provider {
public:
    explicit HttpProvider(ProviderConfig cfg) : cfg_(std::move(cfg)), url_(parse_base_url(cfg_.base_url)) {
        if (cfg_.name.empty()) throw ValidationError("provider config: empty name");
        if (!cfg_.auth_env_var.empty()) {
            const char* token = std::getenv(cfg_.auth_env_var.c_str());
            if (token == nullptr || *token == '\0')
                throw AuthError("provider '" + cfg_.name + "': auth env var " + cfg_.auth_env_var +
                                " is not set");
            token_ = token;
        }
    }

    const ProviderConfig& config() const override { return cfg_; }

    CompletionResult complete(const PromptInstance& prompt, int sample_index,
                              const SamplingConfig& sampling) override {
        json body = {
            {"model", cfg_.model_id.empty() ? cfg_.name : cfg_.model_id},
            {"messages", json::array({json{{"role", "user"}, {"content", prompt.full_prompt}}})},
            {"temperature", sampling.temperature},
            {"max_tokens", 1024},
        };
        const std::string payload = body.dump();
        const std::string path = url_.path_prefix + "/chat/completions";

        const auto t0 = std::chrono::steady_clock::now();
        std::string last_error;
        int retry_after_s = 0;
        for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
            if (attempt > 0) backoff(attempt, retry_after_s);
            retry_after_s = 0;

            httplib::Client client(url_.origin);
            client.set_connection_timeout(std::chrono::duration<double>(cfg_.timeout_seconds));
            client.set_read_timeout(std::chrono::duration<double>(cfg_.timeout_seconds));
            client.set_write_timeout(std::chrono::duration<double>(cfg_.timeout_seconds));
            httplib::Headers headers;
            if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);

            auto res = client.Post(path, headers, payload, "application/json");
            if (!res) {
                last_error = "connection failure: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status == 401 || res->status == 403)
                throw AuthError("provider '" + cfg_.name + "': HTTP " + std::to_string(res->status));
            if (res->status == 429) {
                last_error = "HTTP 429";
                if (res->has_header("Retry-After"))
                    retry_after_s = std::atoi(res->get_header_value("Retry-After").c_str());
                continue;
            }
            if (res->status >= 500) {
                last_error = "HTTP " + std::to_string(res->status);
                continue;
            }
            if (res->status != 200)
                throw TransportError("provider '" + cfg_.name + "': HTTP " +
                                     std::to_string(res->status) + ": " + res->body);

            std::string content;
            try {
                json reply = json::parse(res->body);
                content = reply.at("choices").at(0).at("message").at("content").get<std::string>();
            } catch (const json::exception& e) {
                last_error = std::string("malformed completion body: ") + e.what();
                continue;
            }

            CompletionResult out;
            out.prompt_hash = prompt.prompt_hash;
            out.model = cfg_.name;
            out.sample_index = sample_index;
            out.raw_text = std::move(content);
            out.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                 std::chrono::steady_clock::now() - t0)
                                 .count();
            out.transport_status = attempt == 0 ? TransportStatus::ok : TransportStatus::retried_ok;
            return out;
        }
        if (last_error == "HTTP 429")
            throw RateLimitExceeded("provider '" + cfg_.name + "': rate limited after " +
                                    std::to_string(cfg_.max_retries) + " retries");
        throw TransportError("provider '" + cfg_.name + "': " + last_error + " after " +
                             std::to_string(cfg_.max_retries) + " retries");
    }

private:
    void backoff(int attempt, int retry_after_s) const {
        std::int64_t ms = static_cast<std::int64_t>(cfg_.retry_base_ms) * (1LL << (attempt - 1));
        ms = std::min<std::int64_t>(ms, 30'000);
        if (retry_after_s > 0) ms = std::max<std::int64_t>(ms, 1000LL * retry_after_s);
        std::this_thread::sleep_for(std::chrono::milliseconds(ms));
    }

    ProviderConfig cfg_;
    ParsedUrl url_;
    std::string token_;
};

}  // namespace

std::unique_ptr<Provider> make_http_provider(const ProviderConfig& config) {
    return std::make_unique<HttpProvider>(config);
}

}  // namespace nsa
