#include "nsa/corpus.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "nsa/errors.hpp"

namespace nsa {

namespace {

const std::set<std::string> kScenarioFields = {"id",     "domain", "title", "context",
                                               "action", "goal",   "subject"};

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

Scenario scenario_from_fields(const std::map<std::string, std::string>& fields, int first_line,
                              const std::string& origin) {
    for (const auto& name : kScenarioFields) {
        if (!fields.count(name))
            throw ParseError(origin + ":" + std::to_string(first_line) + ": scenario missing field '" +
                             name + "'");
    }
    Scenario s;
    s.id = fields.at("id");
    s.domain = fields.at("domain");
    s.title = fields.at("title");
    s.context = fields.at("context");
    s.action = fields.at("action");
    s.goal = fields.at("goal");
    s.subject = fields.at("subject");
    return s;
}

}  // namespace

void validate_scenario(const Scenario& s, const CorpusOptions& opts) {
    if (s.id.empty()) throw ValidationError("scenario with empty id");
    auto check_phrase = [&](const std::string& name, const std::string& value) {
        if (value.empty())
            throw ValidationError("scenario '" + s.id + "': " + name + " is empty");
        if (value.find("not ") != std::string::npos)
            throw ValidationError("scenario '" + s.id + "': " + name +
                                  " contains 'not '; polarity must come from the framing template");
    };
    check_phrase("action", s.action);
    check_phrase("goal", s.goal);
    if (s.subject.empty()) throw ValidationError("scenario '" + s.id + "': subject is empty");
    if (s.context.empty()) throw ValidationError("scenario '" + s.id + "': context is empty");
    if (!kCanonicalDomains.count(s.domain) && !opts.extra_domains.count(s.domain))
        throw ValidationError("scenario '" + s.id + "': domain '" + s.domain +
                              "' is not canonical and not declared as an extension domain");
}

std::vector<Scenario> parse_corpus(const std::string& text, const std::string& origin,
                                   const CorpusOptions& opts) {
    std::vector<Scenario> scenarios;
    std::map<std::string, std::string> fields;
    int record_first_line = 0;

    auto flush_record = [&]() {
        if (fields.empty()) return;
        scenarios.push_back(scenario_from_fields(fields, record_first_line, origin));
        fields.clear();
    };

    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty()) {
            flush_record();
            continue;
        }
        if (t[0] == '#') continue;
        std::size_t colon = t.find(':');
        if (colon == std::string::npos)
            throw ParseError(origin + ":" + std::to_string(lineno) +
                             ": expected 'field: value', got '" + t + "'");
        std::string key = trim(t.substr(0, colon));
        std::string value = trim(t.substr(colon + 1));
        if (!kScenarioFields.count(key))
            throw ParseError(origin + ":" + std::to_string(lineno) + ": unknown field '" + key + "'");
        if (fields.empty()) record_first_line = lineno;
        if (fields.count(key))
            throw ParseError(origin + ":" + std::to_string(lineno) + ": duplicate field '" + key +
                             "' in one record");
        fields[key] = value;
    }
    flush_record();

    if (scenarios.empty()) throw ParseError(origin + ": no scenarios found");

    std::set<std::string> seen;
    for (const Scenario& s : scenarios) {
        validate_scenario(s, opts);
        if (!seen.insert(s.id).second)
            throw ValidationError("duplicate scenario id '" + s.id + "'");
    }
    return scenarios;
}

std::vector<Scenario> load_corpus(const std::string& path, const CorpusOptions& opts) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open corpus file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_corpus(buf.str(), path, opts);
}

}  // namespace nsa
