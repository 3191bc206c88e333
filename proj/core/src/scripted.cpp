#include "nsa/scripted.hpp"

#include <cstdio>

#include "nsa/errors.hpp"
#include "nsa/hash.hpp"

namespace nsa {

void validate_scripted_spec(const ScriptedModelSpec& spec) {
    if (spec.name.empty()) throw ValidationError("scripted spec: empty name");
    for (FramingKind k : kAllFramings) {
        auto it = spec.agree_probability.find(k);
        if (it == spec.agree_probability.end())
            throw ValidationError("scripted spec '" + spec.name + "': missing agree probability for " +
                                  std::string(framing_name(k)));
        if (it->second < 0.0 || it->second > 1.0)
            throw ValidationError("scripted spec '" + spec.name + "': agree probability outside [0,1]");
    }
    if (spec.confidence_lo < 0 || spec.confidence_hi > 100 || spec.confidence_lo > spec.confidence_hi)
        throw ValidationError("scripted spec '" + spec.name + "': bad confidence range");
}

ScriptedModelSpec scripted_archetype(const std::string& name) {
    ScriptedModelSpec spec;
    spec.name = name;
    using enum FramingKind;
    if (name == "mirror") {
        spec.agree_probability = {{F0, 0.30}, {F1, 0.70}, {F2, 0.30}, {F3, 0.70}};
        spec.confidence_lo = 55;
        spec.confidence_hi = 75;
    } else if (name == "blind") {
        spec.agree_probability = {{F0, 0.24}, {F1, 0.24}, {F2, 0.24}, {F3, 0.24}};
        spec.confidence_lo = 80;
        spec.confidence_hi = 95;
    } else if (name == "ceiling") {
        spec.agree_probability = {{F0, 0.24}, {F1, 0.23}, {F2, 0.31}, {F3, 0.00}};
        spec.confidence_lo = 85;
        spec.confidence_hi = 95;
    } else {
        throw ValidationError("unknown scripted archetype '" + name +
                              "' (expected mirror, blind or ceiling)");
    }
    return spec;
}

namespace {

class ScriptedProvider final : public Provider {
public:
    explicit ScriptedProvider(ScriptedModelSpec spec) : spec_(std::move(spec)) {
        validate_scripted_spec(spec_);
        config_.name = spec_.name;
        config_.base_url = "scripted";
        config_.model_id = spec_.name;
        config_.category = "scripted";
        config_.max_concurrent = 8;
        config_.requests_per_minute = 60'000'000;
    }

    const ProviderConfig& config() const override { return config_; }
    bool deterministic_transport() const override { return true; }

    CompletionResult complete(const PromptInstance& prompt, int sample_index,
                              const SamplingConfig& sampling) override {
        const double p = spec_.agree_probability.at(prompt.framing);

        const bool per_cell =
            spec_.mode == ScriptedMode::threshold_deterministic || sampling.temperature == 0.0;

        std::uint64_t state = fnv1a64(spec_.name, fnv1a64(sampling.seed));
        state = fnv1a64(prompt.prompt_hash, state);
        if (!per_cell) state = fnv1a64(static_cast<std::uint64_t>(sample_index), state);

        const bool agree = unit_double(splitmix64(state)) < p;
        const int span = spec_.confidence_hi - spec_.confidence_lo + 1;
        const int confidence =
            spec_.confidence_lo + static_cast<int>(splitmix64(state) % static_cast<std::uint64_t>(span));

        char buf[64];
        std::snprintf(buf, sizeof(buf), "%s\nCONFIDENCE: %d", agree ? "AGREE" : "DISAGREE",
                      confidence);

        CompletionResult res;
        res.prompt_hash = prompt.prompt_hash;
        res.model = spec_.name;
        res.sample_index = sample_index;
        res.raw_text = buf;
        res.latency_ms = 0;
        res.transport_status = TransportStatus::ok;
        return res;
    }

private:
    ScriptedModelSpec spec_;
    ProviderConfig config_;
};

}  // namespace

std::unique_ptr<Provider> make_scripted_provider(const ScriptedModelSpec& spec) {
    return std::make_unique<ScriptedProvider>(spec);
}

}  // namespace nsa
