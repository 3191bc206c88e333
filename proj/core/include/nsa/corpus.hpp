#pragma once

#include <set>
#include <string>
#include <vector>

namespace nsa {

// The seven canonical scenario domains. Extension domains are allowed when
// they are declared by the caller (and given thresholds at certification
// time); they stay plain strings throughout.
inline const std::set<std::string> kCanonicalDomains = {
    "medical", "financial", "business", "legal", "military", "education", "science"};

struct Scenario {
    std::string id;       // unique, stable
    std::string domain;
    std::string title;
    std::string context;  // the dilemma narrative
    std::string action;   // infinitive phrase, e.g. "rob the store"
    std::string goal;     // infinitive phrase, e.g. "save his daughter"
    std::string subject;  // grammatical subject used in templates, e.g. "he"
};

struct CorpusOptions {
    // Extension domains accepted in addition to the canonical seven.
    std::set<std::string> extra_domains;
};

// Loads and validates a corpus file (one record per scenario, `key: value`
// lines, records separated by blank lines, '#' comments).
// Throws ParseError on malformed input (with line number) and
// ValidationError on invariant violations (names the scenario id).
std::vector<Scenario> load_corpus(const std::string& path, const CorpusOptions& opts = {});

// Same, from an in-memory string; `origin` is used in error messages.
std::vector<Scenario> parse_corpus(const std::string& text, const std::string& origin,
                                   const CorpusOptions& opts = {});

// Validates a single scenario against the corpus invariants.
void validate_scenario(const Scenario& s, const CorpusOptions& opts = {});

}  // namespace nsa
