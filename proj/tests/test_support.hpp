#pragma once

// Shared helpers for the unit and acceptance suites: in-memory simulation of
// scripted runs through the real prompt -> completion -> parse -> filter ->
// normalize path, without touching disk.

#include <string>
#include <vector>

#include "nsa/corpus.hpp"
#include "nsa/metrics.hpp"
#include "nsa/parser.hpp"
#include "nsa/prompt.hpp"
#include "nsa/scripted.hpp"

namespace nsa::test {

inline std::vector<Scenario> default_corpus() { return load_corpus(NSA_CORPUS_FILE); }

// Runs one scripted model over the corpus and returns normalized trials.
inline std::vector<TrialRecord> simulate_records(const ScriptedModelSpec& spec,
                                                 const std::vector<Scenario>& corpus,
                                                 const SamplingConfig& sampling) {
    auto provider = make_scripted_provider(spec);
    std::vector<RawTrial> trials;
    trials.reserve(corpus.size() * kAllFramings.size() *
                   static_cast<std::size_t>(sampling.samples_per_cell));
    for (const Scenario& s : corpus) {
        for (FramingKind f : kAllFramings) {
            PromptInstance prompt = render_prompt(s, f, "v1");
            for (int i = 0; i < sampling.samples_per_cell; ++i) {
                CompletionResult res = provider->complete(prompt, i, sampling);
                RawTrial t;
                t.model = spec.name;
                t.scenario_id = s.id;
                t.domain = s.domain;
                t.framing = std::string(framing_name(f));
                t.sample_index = i;
                t.temperature = sampling.temperature;
                t.transport_ok = true;
                t.parsed = parse_decision(res.raw_text);
                trials.push_back(std::move(t));
            }
        }
    }
    FilterResult filtered = quality_filter(trials, sampling.samples_per_cell);
    return normalize_trials(filtered.kept);
}

// Mirror archetype with a configurable affirmative agree probability.
inline ScriptedModelSpec mirror_spec(const std::string& name, double p) {
    ScriptedModelSpec spec;
    spec.name = name;
    spec.agree_probability = {{FramingKind::F0, p},
                              {FramingKind::F1, 1.0 - p},
                              {FramingKind::F2, p},
                              {FramingKind::F3, 1.0 - p}};
    spec.confidence_lo = 55;
    spec.confidence_hi = 75;
    return spec;
}

// Uniform agree probability across all four framings.
inline ScriptedModelSpec flat_spec(const std::string& name, double p,
                                   ScriptedMode mode = ScriptedMode::stochastic) {
    ScriptedModelSpec spec;
    spec.name = name;
    for (FramingKind k : kAllFramings) spec.agree_probability[k] = p;
    spec.mode = mode;
    return spec;
}

inline double model_nsi(const std::vector<TrialRecord>& records) {
    return group_nsi(records, Scope::model).at(0).nsi;
}

}  // namespace nsa::test
