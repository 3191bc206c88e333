#pragma once

#include <cstdint>
#include <string>

#include "nsa/corpus.hpp"
#include "nsa/framing.hpp"

namespace nsa {

struct PromptInstance {
    std::string scenario_id;
    FramingKind framing;
    std::string statement;    // the rendered claim to be judged
    std::string full_prompt;  // statement wrapped in the elicitation envelope
    std::uint64_t prompt_hash = 0;
};

struct RenderOptions {
    // Render the negation marker as "NOT" instead of "not". Off by default;
    // only useful for replicating typographically emphasised variants.
    bool emphasize_not = false;
};

// Renders the framed claim with subject/action/goal substituted.
// Pure: equal inputs give byte-equal outputs. Throws TemplateError when a
// slot value is empty.
std::string render_statement(const Scenario& s, FramingKind f, const RenderOptions& opts = {});

// Wraps the statement in the versioned elicitation envelope
// (context, statement, fixed response-format instruction).
// Throws TemplateError when envelope_version is not registered.
PromptInstance render_prompt(const Scenario& s, FramingKind f, const std::string& envelope_version,
                             const RenderOptions& opts = {});

// True iff `version` names a registered elicitation envelope.
bool envelope_registered(const std::string& version);

}  // namespace nsa
