#pragma once

#include <map>
#include <memory>
#include <string>

#include "nsa/framing.hpp"
#include "nsa/provider.hpp"

namespace nsa {

enum class ScriptedMode {
    stochastic,              // each sample drawn independently
    threshold_deterministic  // whole cell committed to one verdict per seed
};

// A scripted mock model: fully offline, deterministic given the sampling
// seed, and emitting envelope-conformant verdict text. agree_probability is
// the raw probability of replying AGREE under each framing.
struct ScriptedModelSpec {
    std::string name;
    std::map<FramingKind, double> agree_probability;  // all four framings required
    int confidence_lo = 60;
    int confidence_hi = 90;
    ScriptedMode mode = ScriptedMode::stochastic;
};

// Behavioral archetypes used throughout the test and acceptance suites:
//   mirror  - processes negation correctly: agree 0.30 under F0/F2 and 0.70
//             under F1/F3, so normalized endorsement is flat at 0.30.
//   blind   - ignores polarity: agree 0.24 under every framing, so normalized
//             endorsement splits 0.24 affirmative vs 0.76 negated.
//   ceiling - ignores the negation operator and hits the F3 ceiling: agree
//             {0.24, 0.23, 0.31, 0.00}, i.e. normalized endorsement
//             {0.24, 0.77, 0.31, 1.00} and an expected swing of 0.76.
ScriptedModelSpec scripted_archetype(const std::string& name);

void validate_scripted_spec(const ScriptedModelSpec& spec);

// Scripted provider. In threshold_deterministic mode, or whenever the
// sampling temperature is 0.0, the verdict is committed once per
// (seed, model, prompt) cell, mimicking greedy decoding; otherwise each
// sample index draws independently.
std::unique_ptr<Provider> make_scripted_provider(const ScriptedModelSpec& spec);

}  // namespace nsa
