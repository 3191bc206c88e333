#include "nsa/prompt.hpp"

#include <cctype>

#include "nsa/errors.hpp"
#include "nsa/hash.hpp"

namespace nsa {

namespace {

// Envelope v1. The verdict instruction is fixed so replies stay machine
// parseable; the version string is part of the prompt hash so any future
// change is visible in run provenance.
constexpr std::string_view kVerdictInstruction =
    "First line: AGREE or DISAGREE with the statement. Second line: CONFIDENCE: <0-100>.";

std::string substitute(std::string_view tmpl, const Scenario& s, const RenderOptions& opts) {
    std::string out;
    out.reserve(tmpl.size() + s.action.size() + s.goal.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            std::size_t close = tmpl.find('}', i);
            if (close == std::string_view::npos) throw TemplateError("unterminated slot in template");
            std::string_view slot = tmpl.substr(i + 1, close - i - 1);
            const std::string* value = nullptr;
            if (slot == "subject") value = &s.subject;
            else if (slot == "action") value = &s.action;
            else if (slot == "goal") value = &s.goal;
            else throw TemplateError("unknown slot '" + std::string(slot) + "'");
            if (value->empty())
                throw TemplateError("scenario '" + s.id + "': empty value for slot '" +
                                    std::string(slot) + "'");
            out += *value;
            i = close + 1;
        } else {
            out += tmpl[i++];
        }
    }
    if (opts.emphasize_not) {
        std::size_t pos = out.find(" not ");
        if (pos != std::string::npos) out.replace(pos, 5, " NOT ");
    }
    if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
    return out;
}

}  // namespace

bool envelope_registered(const std::string& version) { return version == "v1"; }

std::string render_statement(const Scenario& s, FramingKind f, const RenderOptions& opts) {
    return substitute(framing(f).tmpl, s, opts);
}

PromptInstance render_prompt(const Scenario& s, FramingKind f, const std::string& envelope_version,
                             const RenderOptions& opts) {
    if (!envelope_registered(envelope_version))
        throw TemplateError("unregistered envelope version '" + envelope_version + "'");

    PromptInstance p;
    p.scenario_id = s.id;
    p.framing = f;
    p.statement = render_statement(s, f, opts);

    std::string prompt;
    prompt.reserve(s.context.size() + p.statement.size() + 128);
    prompt += s.context;
    prompt += "\n\nStatement: ";
    prompt += p.statement;
    prompt += "\n\n";
    prompt += kVerdictInstruction;
    prompt += "\n";
    p.full_prompt = std::move(prompt);

    std::uint64_t h = fnv1a64(p.scenario_id);
    h = fnv1a64(framing_name(f), h);
    h = fnv1a64(envelope_version, h);
    h = fnv1a64(p.full_prompt, h);
    p.prompt_hash = h;
    return p;
}

}  // namespace nsa
